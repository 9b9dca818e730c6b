import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tangle import bayesnet as bn
from tangle.errors import BadParams, InvalidNet
from tangle.sampling import random_amplitude_table, random_amplitudes, random_stochastic_table, random_unitary
from tangle.states import partial_trace

seeds = st.integers(0, 2**32 - 1)


def enumerate_product(net):
    """Independent oracle: loop over configurations in topological order."""
    cards = {n.id: n.cardinality for n in net.nodes}
    order = net.ids
    out = {}
    for config in itertools.product(*(range(cards[i]) for i in order)):
        val = dict(zip(order, config))
        amp = 1
        for n in net.nodes:
            amp = amp * n.table[(val[n.id], *(val[p] for p in n.parents))]
        out[config] = amp
    return out


# ----------------------------------------------------------------- codec


@given(st.lists(st.integers(1, 4), min_size=1, max_size=4), seeds)
def test_compound_codec_round_trip_row_major(comps, seed):
    rng = np.random.default_rng(seed)
    values = tuple(int(rng.integers(0, c)) for c in comps)
    idx = bn.encode_compound(values, comps)
    assert bn.decode_compound(idx, comps) == values
    # left component most significant
    expected = 0
    for v, c in zip(values, comps):
        expected = expected * c + v
    assert idx == expected


# -------------------------------------------------------------- validation


def test_fig3_with_unitaries_is_valid(rng):
    net = bn.build_fig3(random_amplitudes(rng, (2, 2)), random_unitary(rng, 2), random_unitary(rng, 2))
    assert bn.validate(net) == []


def test_classical_row_violation_reports_residual():
    net = bn.BayesNet(bn.CLASSICAL, (bn.Node("a", 2, (), np.array([0.5, 0.6])),))
    (v,) = bn.validate(net)
    assert v.node == "a" and v.residual == pytest.approx(0.1, abs=1e-12)


def test_quantum_non_isometric_node_is_named():
    good = bn.Node("e", 2, (), np.array([1.0, 0.0], dtype=complex))
    bad = bn.Node("x", 2, ("e",), np.array([[1.0, 1.0], [1.0, 0.0]], dtype=complex))
    problems = bn.validate(bn.BayesNet(bn.QUANTUM, (good, bad)))
    assert problems and {p.node for p in problems} == {"x"}
    with pytest.raises(InvalidNet):
        bn.meta_state(bn.BayesNet(bn.QUANTUM, (good, bad)))


def test_structural_errors():
    with pytest.raises(InvalidNet):
        bn.BayesNet(bn.CLASSICAL, (bn.Node("a", 2, ("zz",), np.ones((2, 2)) / 2),))
    with pytest.raises(InvalidNet):
        bn.BayesNet(bn.CLASSICAL, (bn.Node("a", 2, (), np.ones(3) / 3),))
    cyc = (bn.Node("a", 2, ("b",), np.eye(2)), bn.Node("b", 2, ("a",), np.eye(2)))
    with pytest.raises(InvalidNet):
        bn.BayesNet(bn.CLASSICAL, cyc)


# ---------------------------------------------------------- joint / meta


def test_fig1_deterministic_channels():
    net = bn.build_fig1([0.5, 0.5], np.eye(2), np.eye(2))
    p = bn.joint_distribution(net)  # axes (lam, a, b)
    for lam, a, b in itertools.product(range(2), repeat=3):
        assert p[lam, a, b] == pytest.approx(0.5 * (a == lam) * (b == lam), abs=1e-15)


def test_single_root_and_independent_roots(rng):
    pa, pb = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(2))
    one = bn.BayesNet(bn.CLASSICAL, (bn.Node("a", 3, (), pa),))
    np.testing.assert_allclose(bn.joint_distribution(one), pa)
    two = bn.BayesNet(bn.CLASSICAL, (bn.Node("a", 3, (), pa), bn.Node("b", 2, (), pb)))
    np.testing.assert_allclose(bn.joint_distribution(two), np.outer(pa, pb), atol=1e-15)


@given(seeds, st.sampled_from([bn.CLASSICAL, bn.QUANTUM]), st.integers(1, 5))
def test_product_matches_enumeration_oracle(seed, kind, n_nodes):
    rng = np.random.default_rng(seed)
    net = bn.random_net(rng, kind, n_nodes, cards=[2, 3, 2, 2, 3][:n_nodes])
    oracle = enumerate_product(net)
    got = bn.joint_distribution(net) if kind == bn.CLASSICAL else bn.meta_state(net).tensor()
    for config, amp in oracle.items():
        assert got[config] == pytest.approx(amp, abs=1e-13)
    np.testing.assert_allclose(bn.meta_state_by_enumeration(net) if kind == bn.QUANTUM else got, got, atol=1e-13)
    total = sum(abs(v) ** 2 for v in oracle.values()) if kind == bn.QUANTUM else sum(oracle.values())
    assert total == pytest.approx(1.0, abs=1e-9)


def test_fig3_meta_state_diagonal_schmidt():
    p0, p1 = 0.7, 0.3
    net = bn.build_fig3(np.diag([math.sqrt(p0), math.sqrt(p1)]))
    t = bn.meta_state(net).tensor()  # axes (e, x, y)
    expected = np.zeros((4, 2, 2))
    for x in range(2):
        expected[bn.encode_compound((x, x), (2, 2)), x, x] = math.sqrt((p0, p1)[x])
    np.testing.assert_allclose(t, expected, atol=1e-15)


def test_fig3_trace_over_e_is_diagonal(rng):
    psi0 = random_amplitudes(rng, (2, 3))
    U, V = random_unitary(rng, 2), random_unitary(rng, 3)
    rho = partial_trace(bn.meta_state(bn.build_fig3(psi0, U, V)), ["e"]).density_matrix()
    psi = U @ psi0 @ V.conj().T
    np.testing.assert_allclose(rho, np.diag((np.abs(psi) ** 2).ravel()), atol=1e-13)


def test_fig5_degenerate_weights_reduce_to_one_branch(rng):
    psis = [random_amplitudes(rng, (2, 2)) for _ in range(3)]
    m5 = bn.meta_state(bn.build_fig5([1, 0, 0], psis)).tensor()
    m3 = bn.meta_state(bn.build_fig3(psis[0])).tensor()
    np.testing.assert_allclose(m5[0], m3, atol=1e-14)
    np.testing.assert_allclose(m5[1:], 0, atol=1e-14)


def test_fig7_identity_channels_copy(rng):
    root = random_amplitudes(rng, (2, 2))
    t = bn.meta_state(bn.build_fig7(root, np.eye(2), np.eye(2))).tensor()  # e, x, y, a, b
    for idx in zip(*np.nonzero(np.abs(t) > 1e-14)):
        e, x, y, a, b = idx
        assert (a, b) == (x, y) and bn.decode_compound(e, (2, 2)) == (x, y)


def test_fig6_factorizes_conditionally(rng):
    p_e = rng.dirichlet(np.ones(3))
    chans = [random_stochastic_table(rng, 2, (3,)) for _ in range(3)]
    p = bn.joint_distribution(bn.build_fig6(p_e, chans))
    expected = np.einsum("e,ae,be,ce->eabc", p_e, *chans)
    np.testing.assert_array_equal(p, expected)


# ---------------------------------------------------------------- builders


def test_builder_topologies(rng):
    f3 = bn.build_canonical_net("fig3", psi0=random_amplitudes(rng, (2, 2)))
    assert f3.ids == ("e", "x", "y") and f3.node("x").parents == ("e",)
    alphas = [random_amplitude_table(rng, 4, (2,)).reshape(2, 2, 2) for _ in range(2)]
    f4 = bn.build_canonical_net("fig4", w=[0.4, 0.6], alphas=alphas)
    assert len(f4.nodes) == 9
    f9 = bn.random_fig9(rng, 3)
    assert len(f9.nodes) == 7
    assert all(bn.validate(n) == [] for n in (f3, f4, f9))


def test_builder_errors(rng):
    with pytest.raises(BadParams):
        bn.build_canonical_net("fig8")
    with pytest.raises(BadParams):
        bn.build_canonical_net("fig3", psi0=np.ones((2, 2)))
    with pytest.raises(BadParams):
        bn.build_canonical_net("fig3", psi0=random_amplitudes(rng, (2, 2)), U=np.eye(3))
    with pytest.raises(BadParams):
        bn.build_canonical_net("fig5", w=[0.5, 0.5], psis=[random_amplitudes(rng, (2, 2))])
    with pytest.raises(BadParams):
        bn.build_canonical_net("fig3", nonsense=1)


# ------------------------------------------------------------ serialization


@given(seeds, st.sampled_from([bn.CLASSICAL, bn.QUANTUM]))
def test_json_round_trip_is_bit_exact(seed, kind):
    rng = np.random.default_rng(seed)
    net = bn.random_net(rng, kind, 4, cards=2)
    back = bn.loads(bn.dumps(net))
    assert back.ids == net.ids and back.kind == net.kind
    for a, b in zip(net.nodes, back.nodes):
        assert a.parents == b.parents
        np.testing.assert_array_equal(a.table, b.table)


def test_json_keeps_components(rng):
    net = bn.build_fig3(random_amplitudes(rng, (2, 3)))
    assert bn.loads(bn.dumps(net)).node("e").components == (2, 3)


def test_malformed_json_is_invalid_net():
    with pytest.raises(InvalidNet):
        bn.net_from_dict({"kind": "classical", "nodes": [{"id": "a"}]})
