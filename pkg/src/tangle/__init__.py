"""Tanglement, conditional mutual information and entanglement of formation on Bayesian nets."""

from .bayesnet import BayesNet, Node, build_canonical_net, classical_state, meta_state, validate
from .identities import EntropyExpr, Identity, H, dualize, evaluate, mu, parse, tau
from .measures import ef_bell_diagonal, ef_mixed, ef_pure, st_bell_diagonal, st_general_mixed, two_qubit_t
from .states import LabeledState, cmi, e_sum, entropy, partial_trace, tanglement
from .verify import McReport, OptReport, max_st

__all__ = [
    "BayesNet", "Node", "build_canonical_net", "classical_state", "meta_state", "validate",
    "EntropyExpr", "Identity", "H", "dualize", "evaluate", "mu", "parse", "tau",
    "ef_bell_diagonal", "ef_mixed", "ef_pure", "st_bell_diagonal", "st_general_mixed", "two_qubit_t",
    "LabeledState", "cmi", "e_sum", "entropy", "partial_trace", "tanglement",
    "McReport", "OptReport", "max_st",
]
