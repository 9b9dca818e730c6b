"""End-to-end acceptance criteria.

Each test records one PASS/FAIL line (with runtime) that is printed in the
pytest terminal summary, or directly when run as ``python tests/test_acceptance.py``.
"""
import json
import time

import numpy as np
import pytest

from tangle import bayesnet as bn
from tangle import cli
from tangle import identities as ids
from tangle import verify as vf
from tangle.measures import bell_diagonal_state, bell_state, ef_bell_diagonal, ef_mixed, st_bell_diagonal
from tangle.sampling import random_density, random_simplex, trial_rng
from tangle.states import EntropyCache, LabeledState, compress_repeated, entropy, partial_trace, tanglement

RESULTS: list[str] = []
SEED = 2024


def record(k: int, title: str, ok: bool, elapsed: float, limit: float, detail: str) -> None:
    ok = ok and elapsed < limit
    RESULTS.append(f"{'PASS' if ok else 'FAIL'} [{k:2d}] {title}: {detail} ({elapsed:.1f}s, limit {limit:.0f}s)")
    assert ok, RESULTS[-1]


def test_01_pure_state_equivalence():
    t0 = time.perf_counter()
    reps = [vf.check_max_st(n, dims, SEED) for dims, n in (((2, 2), 67), ((2, 3), 67), ((3, 3), 66))]
    short = max(r.extras["max_shortfall"] for r in reps)
    over = max(r.extras["max_overshoot"] for r in reps)
    bad = sum(r.violations for r in reps)
    record(1, "max_st reaches E_F", bad == 0 and short < 1e-6 and over <= 1e-9, time.perf_counter() - t0, 120,
           f"200 states, max shortfall {short:.2e}, max overshoot {over:.2e}")


def fig5_st(w):
    meta = bn.meta_state(bn.build_fig5(w, [bell_state(f) for f in range(4)]))
    return tanglement(partial_trace(meta, ["f"]), [["x"], ["y"]], speaker=["e"])


def test_02_bell_closed_forms():
    t0 = time.perf_counter()
    st_gap = 0.0
    for k in range(100):
        w = random_simplex(trial_rng(SEED, k), 4)
        st_gap = max(st_gap, abs(st_bell_diagonal(w) - fig5_st(w)))
    ef_gap = 0.0
    for k in range(20):
        w = random_simplex(trial_rng(SEED + 1, k), 4)
        ef_gap = max(ef_gap, abs(ef_bell_diagonal(w) - ef_mixed(bell_diagonal_state(w), dims=(2, 2)).value))
    record(2, "Bell closed forms", st_gap < 1e-9 and ef_gap < 1e-3, time.perf_counter() - t0, 300,
           f"ST vs pipeline {st_gap:.2e} (100), E_F vs optimizer {ef_gap:.2e} (20)")


def test_03_negative_cmi():
    t0 = time.perf_counter()
    v = vf.negative_cmi_example()
    record(3, "negative c.m.i.", abs(v + 1) < 1e-12, time.perf_counter() - t0, 1, f"value {v!r}")


def _identity_residual(kind: str, n: int, trial: int) -> float:
    rng = trial_rng(SEED, 1000 * n + trial)
    # one extra listener so the n+1 delta identities are bound too
    if kind == bn.CLASSICAL:
        s = bn.classical_state(bn.random_net(rng, bn.CLASSICAL, n + 2, 2, 2))
    else:
        s = bn.meta_state(bn.random_net(rng, bn.QUANTUM, n + 3, 2, 2))
    cache = EntropyCache(s)
    binding = {k: [f"v{k}"] for k in range(1, n + 2)}
    return max(abs(ids.evaluate(i, s, binding, ["v0"], cache=cache, expand=False)) for i in ids.property_identities(n))


def test_04_identity_suite():
    t0 = time.perf_counter()
    worst = 0.0
    for n in (2, 3, 4):
        for kind in (bn.CLASSICAL, bn.QUANTUM):
            worst = max(worst, max(_identity_residual(kind, n, t) for t in range(100)))
    formal = all(ids.dualize(ids.dualize(ids.tau(*range(1, n + 1)))) == ids.tau(*range(1, n + 1))
                 and ids.tau_to_mu(n).holds_formally() for n in range(2, 7))
    record(4, "identity suite", worst < 1e-9 and formal, time.perf_counter() - t0, 180,
           f"max residual {worst:.2e} over 600 states, involution n=2..6 {'exact' if formal else 'broken'}")


def test_05_conditional_separability():
    t0 = time.perf_counter()
    reps = [vf.check_cond_separable(100, n, SEED) for n in (2, 3)]
    st_max = max(max(r.extras["max_st_state"], r.extras["max_st_net"]) for r in reps)
    ht_max = max(r.extras["max_ht_classical"] for r in reps)
    record(5, "conditional separability", st_max < 1e-9 and ht_max < 1e-12, time.perf_counter() - t0, 120,
           f"max ST {st_max:.2e}, max classical HT {ht_max:.2e}")


def test_06_conditional_data_processing():
    t0 = time.perf_counter()
    reps = [vf.check_cond_dp(1000, 2, bn.CLASSICAL, SEED), vf.check_cond_dp(1000, 2, bn.QUANTUM, SEED),
            vf.check_cond_dp(200, 3, bn.QUANTUM, SEED)]
    bad = sum(r.violations for r in reps)
    worst = max(r.worst_residual for r in reps)
    record(6, "conditional data processing", bad == 0, time.perf_counter() - t0, 300,
           f"{bad} violations over 2200 nets, worst HT(a|e)-HT(x|e) {worst:.2e}")


def test_07_dephasing():
    t0 = time.perf_counter()
    reps = [vf.check_appendix_a(10_000, (2, 2), SEED), vf.check_appendix_a(1_000, (3, 4), SEED)]
    bad = sum(r.violations for r in reps)
    grad = max(r.extras["max_phase_gradient"] for r in reps)
    record(7, "E_F(|psi|) <= E_F(psi)", bad == 0 and grad < 1e-5, time.perf_counter() - t0, 120,
           f"{bad} violations over 11000 states, max phase gradient {grad:.2e}")


def test_08_mutual_information_bound():
    t0 = time.perf_counter()
    reps = [vf.check_appendix_b(10_000, (2, 2), SEED), vf.check_appendix_b(1_000, (3, 3), SEED)]
    bad = sum(r.violations for r in reps)
    grad = max(r.extras["max_eta_gradient"] for r in reps)
    gain = max(r.extras["max_probe_gain"] for r in reps)
    record(8, "H(x:y) <= E_F(sqrt P)", bad == 0 and grad < 1e-5 and gain <= 1e-9, time.perf_counter() - t0, 180,
           f"{bad} violations over 11000 tables, max gradient {grad:.2e}, max probe gain {gain:.2e}")


def _repeated_state(rng, d: int, extra: int) -> LabeledState:
    rho = random_density(rng, d * extra, int(rng.integers(1, d * extra + 1)))
    big = np.zeros((d * extra * d,) * 2, dtype=complex)
    idx = [a * extra * d + c * d + a for a in range(d) for c in range(extra)]
    big[np.ix_(idx, idx)] = rho
    return LabeledState.density(big, [("a", d), ("c", extra), ("b", d)])


def test_09_repeated_index_compression():
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(100):
        rng = trial_rng(SEED, k)
        s = _repeated_state(rng, int(rng.integers(2, 4)), int(rng.integers(1, 4)))
        worst = max(worst, abs(entropy(compress_repeated(s, ("a", "b"))) - entropy(s)))
    record(9, "repeated-index compression", worst < 1e-10, time.perf_counter() - t0, 30,
           f"max entropy change {worst:.2e} over 100 states")


def test_10_posteriori_invariance():
    t0 = time.perf_counter()
    rep = vf.check_posteriori(100, (2, 2), SEED)
    r1, r2 = rep.extras["max_esum_residual"], rep.extras["max_trace_residual"]
    record(10, "a posteriori invariance", rep.ok and r1 < 1e-9 and r2 < 1e-9, time.perf_counter() - t0, 60,
           f"e-sum residual {r1:.2e}, trace residual {r2:.2e}")


def test_11_determinism(tmp_path, capsys):
    t0 = time.perf_counter()
    texts = []
    for name in ("a.json", "b.json"):
        path = tmp_path / name
        cli.main(["verify", "all", "--seed", "1", "--format", "json", "--out", str(path)])
        texts.append([ln for ln in path.read_text().splitlines() if '"runtime_ms"' not in ln])
    capsys.readouterr()
    same = texts[0] == texts[1]
    violations = json.loads((tmp_path / "a.json").read_text())["violations"]
    record(11, "verify all determinism", same, time.perf_counter() - t0, 600,
           f"reports {'byte-identical' if same else 'differ'} apart from runtime_ms, {violations} violations")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
