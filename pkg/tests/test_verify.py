import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tangle import bayesnet as bn
from tangle import verify as vf
from tangle.errors import NotNormalized
from tangle.measures import ef_pure, two_qubit_t
from tangle.numkit import binary_entropy
from tangle.sampling import random_amplitudes, random_simplex, random_unitary
from tangle.states import cmi, tanglement

seeds = st.integers(0, 2**32 - 1)
FAST = vf.StBudget(starts=1, iterations=60, rounds=2)


def strip(rep):
    d = rep.to_dict()
    d.pop("runtime_ms")
    return d


# ------------------------------------------------------------------ reports


def test_report_rejects_bad_counts():
    with pytest.raises(ValueError):
        vf.McReport("x", 3, 4, 0.0, 0)
    with pytest.raises(ValueError):
        vf.McReport("x", 3, -1, 0.0, 0)


def test_report_json_is_sorted_and_round_trips():
    rep = vf.McReport("x", 2, 0, -1.0, 7, 1.5, (2, 3), {"b": 1.0, "a": 2})
    doc = json.loads(rep.to_json())
    assert doc["dims"] == [2, 3] and list(doc["extras"]) == ["a", "b"]
    assert rep.ok


def test_merge_counts_flags_and_maxes_values():
    rs = [vf.TrialResult(-1.0, False, {"v": 0.5, "f": True}), vf.TrialResult(0.2, True, {"v": 0.1, "f": True})]
    assert vf._merge(rs) == (1, 0.2, {"v": 0.5, "f": 2})


def test_run_trials_is_independent_of_worker_count():
    a = vf.check_posteriori(6, seed=11, workers=1)
    b = vf.check_posteriori(6, seed=11, workers=2)
    assert strip(a) == strip(b)


# ------------------------------------------------------------------- max ST


def test_mutual_information_oracles():
    assert vf.mutual_information_bits(np.diag([0.5, 0.5])) == pytest.approx(1.0, abs=1e-14)
    assert vf.mutual_information_bits(np.full((2, 3), 1 / 6)) == pytest.approx(0.0, abs=1e-14)


@given(st.floats(0.01, 0.99))
def test_st_of_diagonal_net_is_binary_entropy(p):
    psi0 = np.diag([np.sqrt(p), np.sqrt(1 - p)])
    I = np.eye(2)
    assert vf.st_fig3(psi0, I, I) == pytest.approx(binary_entropy(p), abs=1e-12)


@given(seeds)
def test_closed_form_matches_pipeline(seed):
    rng = np.random.default_rng(seed)
    psi0 = random_amplitudes(rng, (2, 3))
    U, V = random_unitary(rng, 2), random_unitary(rng, 3)
    assert vf.st_fig3(psi0, U, V) == pytest.approx(vf.st_fig3_pipeline(psi0, U, V), abs=1e-10)


def test_max_st_on_schmidt_diagonal_state():
    p = 0.3
    rep = vf.max_st(np.diag([np.sqrt(p), np.sqrt(1 - p)]), FAST)
    assert rep.best_value == pytest.approx(binary_entropy(p), abs=1e-6)
    assert rep.sampled_max <= binary_entropy(p) + 1e-9


@pytest.mark.parametrize("dims", [(2, 2), (2, 3), (3, 3)])
def test_max_st_reaches_ef_without_exceeding_it(dims):
    psi0 = random_amplitudes(np.random.default_rng(5), dims)
    target = ef_pure(psi0)
    rep = vf.max_st(psi0)
    assert abs(rep.best_value - target) < 1e-6
    assert rep.sampled_max <= target + 1e-9
    assert rep.warm_value == pytest.approx(target, abs=1e-9)
    assert np.allclose(rep.alpha, -rep.alpha.conj().T, atol=1e-8)
    json.dumps(rep.to_dict())


def test_max_st_rejects_unnormalized():
    with pytest.raises(NotNormalized):
        vf.max_st(np.eye(2))


@given(seeds)
def test_st_is_blind_to_left_phase_gauge(seed):
    rng = np.random.default_rng(seed)
    psi0 = random_amplitudes(rng, (3, 2))
    U, V = random_unitary(rng, 3), random_unitary(rng, 2)
    D = np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, 3)))
    assert vf.st_fig3(psi0, D @ U, V) == pytest.approx(vf.st_fig3(psi0, U, V), abs=1e-12)


def test_check_max_st_small():
    rep = vf.check_max_st(3, (2, 2), seed=1, budget=FAST)
    assert rep.ok and rep.extras["max_overshoot"] <= 1e-9


# --------------------------------------------------------------- posteriori


def test_posteriori_examples(rng):
    psi = random_amplitudes(rng, (2, 2))
    r1, r2 = vf.check_posteriori_invariance(psi, random_unitary(rng, 2), random_unitary(rng, 2))
    assert r1 < 1e-9 and r2 < 1e-9
    assert vf.check_posteriori(10, (2, 3), seed=2).ok


def test_posteriori_catches_broken_tanglement():
    def broken(s, groups, speaker):
        return tanglement(s, groups, speaker=speaker) + (0.1 if groups[0] == ["a"] else 0.0)

    assert vf.check_posteriori(4, seed=0, tanglement_fn=broken).violations == 4


# --------------------------------------------------------------- cond DP


@pytest.mark.parametrize("kind,n", [(bn.CLASSICAL, 2), (bn.QUANTUM, 2), (bn.CLASSICAL, 3), (bn.QUANTUM, 3)])
def test_cond_dp_holds(kind, n):
    rep = vf.check_cond_dp(10, n, kind, seed=4)
    assert rep.ok, rep.to_dict()
    if kind == bn.QUANTUM:
        assert rep.extras["esum_violations"] == 0


def test_cond_dp_markov_extras_for_two_listeners():
    rep = vf.check_cond_dp(10, 2, bn.QUANTUM, seed=4)
    assert rep.extras["markov_a_given_ey"] < 1e-9


def test_cond_dp_catches_inflated_output_tanglement():
    def broken(s, groups, speaker):
        return tanglement(s, groups, speaker=speaker) + (1.0 if groups[0] == ["a"] else 0.0)

    assert vf.check_cond_dp(5, 2, bn.CLASSICAL, seed=0, tanglement_fn=broken).violations == 5


# --------------------------------------------------- dephasing and Schmidt


@given(seeds)
def test_dephasing_never_raises_ef(seed):
    psi = random_amplitudes(np.random.default_rng(seed), (2, 2))
    assert ef_pure(np.abs(psi)) <= ef_pure(psi) + 1e-9
    assert two_qubit_t(np.abs(psi)).t <= two_qubit_t(psi).t + 1e-9


def test_phase_gradient_vanishes_at_magnitudes(rng):
    psi = random_amplitudes(rng, (2, 3))
    assert np.max(np.abs(vf.phase_gradient(np.abs(psi)))) < 1e-5
    assert np.max(np.abs(vf.phase_gradient(psi))) > 1e-3


@pytest.mark.parametrize("dims", [(2, 2), (3, 4)])
def test_check_appendix_a(dims):
    assert vf.check_appendix_a(30, dims, seed=6).ok


def test_appendix_a_requires_sorted_dims():
    with pytest.raises(ValueError):
        vf.check_appendix_a(1, (3, 2))


def test_appendix_a_catches_broken_ef():
    def broken(m):
        return ef_pure(m) + (2.0 if not np.iscomplexobj(m) else 0.0)

    assert vf.check_appendix_a(5, seed=0, ef_fn=broken).violations == 5


def test_eta_fixtures():
    assert vf.mutual_information_bits(np.diag([0.5, 0.5])) - ef_pure(np.sqrt(np.diag([0.5, 0.5]))) == pytest.approx(0, abs=1e-12)
    P = np.full((2, 2), 0.25)
    assert vf.mutual_information_bits(P) == pytest.approx(0, abs=1e-12)
    assert ef_pure(np.sqrt(P)) == pytest.approx(0, abs=1e-12)


@given(seeds)
def test_mi_never_exceeds_ef_of_root(seed):
    P = random_simplex(np.random.default_rng(seed), 6).reshape(2, 3)
    assert vf.mutual_information_bits(P) <= ef_pure(np.sqrt(P)) + 1e-9


def test_eta_is_stationary_at_schmidt_point(rng):
    P = random_simplex(rng, 9).reshape(3, 3)
    psi_bar = vf.schmidt_diagonal(P)
    assert np.max(np.abs(vf.eta_gradient(psi_bar))) < 1e-5
    assert vf.mutual_information_bits(psi_bar**2) == pytest.approx(ef_pure(np.sqrt(P)), abs=1e-10)


@pytest.mark.parametrize("dims", [(2, 2), (3, 3)])
def test_check_appendix_b(dims):
    rep = vf.check_appendix_b(30, dims, seed=8)
    assert rep.ok and rep.extras["max_probe_gain"] <= 0


def test_appendix_b_catches_broken_mi():
    assert vf.check_appendix_b(5, seed=0, mi_fn=lambda P: vf.mutual_information_bits(P) + 0.5).violations == 5


# ------------------------------------------------------ separability


@pytest.mark.parametrize("n", [2, 3])
def test_cond_separable(n):
    rep = vf.check_cond_separable(8, n, seed=9)
    assert rep.ok, rep.to_dict()


def test_cond_separable_catches_offset():
    def broken(s, groups, speaker):
        return tanglement(s, groups, speaker=speaker) + 1e-3

    assert vf.check_cond_separable(3, 2, seed=0, tanglement_fn=broken).violations == 3


def test_fig4_listener_state_labels(rng):
    q = vf.fig4_listener_state(vf.random_fig4(rng, 2))
    assert sorted(q.ids) == ["a", "q1", "q2"]


# -------------------------------------------------------- negative c.m.i.


def test_negative_cmi():
    assert vf.negative_cmi_example() == pytest.approx(-1.0, abs=1e-12)
    assert vf.negative_cmi_parts() == pytest.approx((0.0, -1.0), abs=1e-12)
    assert vf.check_negative_cmi().ok


def test_negative_cmi_catches_broken_cmi():
    assert not vf.check_negative_cmi(cmi_fn=lambda s, g, speaker: cmi(s, g, speaker=speaker) + 1).ok


# ----------------------------------------------------------------- suites


def test_suite_registry():
    assert set(vf.SUITES) == {"max-st", "posteriori", "cond-dp", "appendix-a", "appendix-b", "cond-sep", "negative-cmi"}
    with pytest.raises(ValueError):
        vf.run_suite("nope", vf.SuiteConfig())
    reps = vf.run_suite("cond-dp", vf.SuiteConfig(trials=5, seed=3))
    assert [r.name for r in reps] == ["cond-dp-classical-n2", "cond-dp-quantum-n2", "cond-dp-quantum-n3"]
