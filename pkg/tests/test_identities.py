import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tangle import bayesnet as bn
from tangle import identities as ids
from tangle.errors import GrammarError, OverlappingBinding, UnboundIndex
from tangle.identities import H, mu, parse, tau
from tangle.sampling import random_density
from tangle.states import EntropyCache, LabeledState, cmi, tanglement
from tangle.verify import check_two_group_separable, random_cond_separable

seeds = st.integers(0, 2**32 - 1)


def pure_h_terms(expr):
    return [(a.groups[0], c) for a, c in expr.expand()]


# ----------------------------------------------------------------- expansion


def test_expand_cmi_two_listeners():
    assert ids.expand_cmi(2).render() == "H(1,E)+H(2,E)-H(1,2,E)-H(E)"


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_expand_cmi_term_count_and_signs(n):
    e = ids.expand_cmi(n)
    assert len(e) == 2**n
    for atom, coef in e:
        members = [m for m in atom.groups[0] if m != ids.SPEAKER]
        expected = -1 if not members else (1 if len(members) % 2 else -1)
        assert coef == expected
    assert len(ids.expand_cmi(n, with_speaker=False)) == 2**n - 1


def test_mu_expands_to_four_terms():
    assert parse("mu(1:2 ; E)").expand().render() == "H(1,E)+H(2,E)-H(1,2,E)-H(E)"


# ------------------------------------------------------------------- duality


def test_dualize_three_listeners():
    assert ids.dualize(parse("tau(1|2|3 ; E)")).render() == "mu(1:2)+mu(1:3)+mu(2:3)-mu(1:2:3)"


def test_two_listener_tau_equals_mu():
    assert ids.tau_to_mu(2).rhs == mu(1, 2)
    assert ids.tau_to_mu(2).holds_formally()


def test_four_listener_duality_shape():
    rhs = ids.tau_to_mu(4).rhs
    by_size = {}
    for atom, coef in rhs:
        by_size.setdefault(len(atom.groups), []).append(coef)
    assert by_size == {2: [1] * 6, 3: [-1] * 4, 4: [1]}


@pytest.mark.parametrize("n", range(2, 7))
def test_duality_is_an_involution(n):
    assert ids.dualize(ids.dualize(tau(*range(1, n + 1)))) == tau(*range(1, n + 1))
    assert ids.dualize(ids.dualize(mu(*range(1, n + 1)))) == mu(*range(1, n + 1))
    assert ids.dualize(ids.tau_to_mu(n).rhs) == tau(*range(1, n + 1))
    assert ids.tau_to_mu(n).holds_formally() and ids.mu_to_tau(n).holds_formally()


# -------------------------------------------------------------- split / deltas


def test_split_examples():
    assert ids.split_compound([[1], [2, 3]]).rhs == tau(1, 2, 3) - tau(2, 3)
    assert ids.split_compound([[1, 2], [3, 4]]).rhs == tau(1, 2, 3, 4) - tau(1, 2) - tau(3, 4)
    assert ids.split_compound([[1], [2, 3], [4, 5, 6]]).rhs == tau(*range(1, 7)) - tau(2, 3) - tau(4, 5, 6)
    assert ids.split_compound([[1], [2, 3]]).holds_formally()


def test_delta_examples():
    assert ids.merge_delta(2).lhs == tau(1, 2, 3) - tau(1, (2, 3)) and ids.merge_delta(2).rhs == tau(2, 3)
    assert ids.prune_delta(2).rhs == tau(1, 3, given=(2,))
    assert ids.remove_delta(2).rhs == tau((1, 2), 3)


def test_chain_rule_shapes():
    assert ids.chain_rule(2).lhs == ids.chain_rule(2).rhs
    assert len(ids.chain_rule(4).rhs) == 3
    assert ids.chain_rule(4).rhs == mu(1, 2, given=(3, 4)) + mu(1, 3, given=(4,)) + mu(1, 4)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_all_identities_hold_formally(n):
    for ident in ids.property_identities(n):
        assert ident.holds_formally(), ident.name


def test_broken_identity_is_detected():
    bad = ids.Identity("sign flip", mu(1, 2), H(1, 0) + H(2, 0) + H(1, 2, 0) - H(0))
    assert not bad.holds_formally()


# -------------------------------------------------------------------- parser


@pytest.mark.parametrize("text", [
    "tau(1|2|(3,4) ; E)", "mu(1:2:(3,4) ; E)", "H(1,2 ; E)", "2*tau(1|2) - mu(1:3 ; 2)",
    "tau(1|2,3 ; E) - tau(1|2|3 ; E) + tau(2|3 ; E)",
])
def test_parse_round_trip(text):
    e = parse(text)
    assert parse(e.render()) == e


def test_parse_conditional_h_and_equation():
    assert parse("H(1,2 ; E)") == H(1, 2, 0) - H(0)
    assert parse("tau(1|2) = mu(1:2)") == tau(1, 2) - mu(1, 2)
    assert parse("tau(1|2,3 ; E)") == tau(1, (2, 3))


def test_property8_expression_vanishes():
    assert not parse("tau(1|2,3 ; E) - tau(1|2|3 ; E) + tau(2|3 ; E)").expand()


@pytest.mark.parametrize("bad", ["tau(1|", "tau(1|1)", "foo(1)", "tau(1|2) +", "mu(E:1)", "tau(0|1)", "tau(1|2 ; 1)"])
def test_grammar_errors(bad):
    with pytest.raises(GrammarError):
        parse(bad)


def test_json_form_is_structural():
    doc = tau(1, (2, 3)).to_json()
    assert doc == [{"coef": 1, "kind": "tau", "groups": [[1], [2, 3]], "given": []}]


# --------------------------------------------------------------- evaluation


def random_state(rng, kind, n):
    if kind == "classical":
        net = bn.random_net(rng, bn.CLASSICAL, n + 1, 2, 2)
        return bn.classical_state(net)
    return bn.meta_state(bn.random_net(rng, bn.QUANTUM, n + 2, 2, 2))


def binding(n):
    return {k: [f"v{k}"] for k in range(1, n + 1)}


@given(seeds, st.sampled_from(["classical", "quantum"]), st.integers(2, 4))
def test_identities_hold_numerically(seed, kind, n):
    rng = np.random.default_rng(seed)
    s = random_state(rng, kind, n + 1)  # one spare listener for the n+1 deltas
    cache = EntropyCache(s)
    for ident in ids.property_identities(n):
        # each side evaluated atom by atom, so nothing cancels symbolically
        direct = ids.evaluate(ident, s, binding(n + 1), ["v0"], cache=cache, expand=False)
        assert abs(direct) < 1e-9, ident.name
        assert ids.evaluate(ident, s, binding(n + 1), ["v0"], cache=cache) == 0.0


def test_direct_evaluation_sees_a_false_identity(rng):
    # a generic mixed state, so that tau(2|3) has no structural zero
    s = LabeledState.density(random_density(rng, 16), [(f"v{k}", 2) for k in range(4)])
    bad = ids.Identity("drop a term", tau(1, (2, 3)), tau(1, 2, 3))
    assert abs(ids.evaluate(bad, s, binding(3), ["v0"], expand=False)) > 1e-6


def test_conditioning_indices_join_the_speaker(rng):
    s = random_state(rng, "quantum", 3)
    v = ids.evaluate(mu(1, 2, given=(3,)), s, binding(3), ["v0"], expand=False)
    assert v == pytest.approx(cmi(s, [["v1"], ["v2"]], ["v0", "v3"]), abs=1e-12)
    assert v == pytest.approx(ids.evaluate(mu(1, 2, given=(3,)), s, binding(3), ["v0"]), abs=1e-12)


@given(seeds, st.sampled_from(["classical", "quantum"]))
def test_evaluator_agrees_with_state_functions(seed, kind):
    rng = np.random.default_rng(seed)
    s = random_state(rng, kind, 3)
    groups = [["v1"], ["v2"], ["v3"]]
    assert ids.evaluate(tau(1, 2, 3), s, binding(3), ["v0"]) == pytest.approx(tanglement(s, groups, ["v0"]), abs=1e-12)
    assert ids.evaluate(ids.tau_to_mu(3).rhs, s, binding(3), ["v0"]) == pytest.approx(tanglement(s, groups, ["v0"]), abs=1e-9)
    assert ids.evaluate(ids.expand_cmi(2), s, binding(2), ["v0"]) == pytest.approx(cmi(s, groups[:2], ["v0"]), abs=1e-12)


def test_evaluate_binding_errors(rng):
    s = random_state(rng, "classical", 2)
    with pytest.raises(UnboundIndex):
        ids.evaluate(tau(1, 3), s, binding(2), ["v0"])
    with pytest.raises(OverlappingBinding):
        ids.evaluate(tau(1, 2), s, {1: ["v1"], 2: ["v1"]}, ["v0"])
    with pytest.raises(OverlappingBinding):
        ids.evaluate(tau(1, 2), s, binding(2), ["v1"])


def test_compound_binding(rng):
    s = random_state(rng, "quantum", 3)
    v = ids.evaluate(tau(1, 2), s, {1: ["v1"], 2: ["v2", "v3"]}, ["v0"])
    assert v == pytest.approx(tanglement(s, [["v1"], ["v2", "v3"]], ["v0"]), abs=1e-12)


# -------------------------------------------------- separability theorems


@pytest.mark.parametrize("n", [3, 4, 5])
def test_two_group_separability_kills_mu(n):
    rep = check_two_group_separable(15, n, seed=3)
    assert rep.violations == 0
    assert rep.extras["max_abs_mu"] < 1e-9
    assert rep.extras["max_tau"] > 1e-3  # tau does not vanish in general


@given(seeds, st.integers(2, 4))
def test_zero_tau_forces_zero_mu(seed, n):
    s = random_cond_separable(np.random.default_rng(seed), n)
    b = {k: [f"X{k}"] for k in range(1, n + 1)}
    t = ids.evaluate(tau(*range(1, n + 1)), s, b, ["E"])
    assert t < 1e-9
    assert abs(ids.evaluate(mu(*range(1, n + 1)), s, b, ["E"])) < 1e-6
