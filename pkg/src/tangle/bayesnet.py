"""Classical (CB) and quantum (QB) Bayesian nets.

A node's table is an array ``T[x, pa_1, ..., pa_k]`` indexed by its own
state first and then by the states of its parents in order. CB tables hold
conditional probabilities and QB tables conditional amplitudes; both are
normalized over the first axis for every parent configuration.

Compound-valued nodes such as ``e = (e1, e2)`` are single nodes whose
cardinality is the product of the component cardinalities, with the
row-major codec of :func:`encode_compound` (left component most
significant).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BadParams, InvalidNet
from .numkit import DEFAULT_TOL
from .sampling import random_amplitude_table, random_amplitudes, random_simplex, random_stochastic_table
from .states import LabeledState

CLASSICAL, QUANTUM = "classical", "quantum"
MAX_META_DIM = 2**20


def encode_compound(values: Sequence[int], components: Sequence[int]) -> int:
    return int(np.ravel_multi_index(tuple(values), tuple(components)))


def decode_compound(index: int, components: Sequence[int]) -> tuple[int, ...]:
    return tuple(int(v) for v in np.unravel_index(index, tuple(components)))


@dataclass(frozen=True, eq=False)
class Node:
    id: str
    cardinality: int
    parents: tuple[str, ...] = ()
    table: np.ndarray = field(default=None, repr=False)
    components: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "parents", tuple(self.parents))
        object.__setattr__(self, "table", np.asarray(self.table))
        if self.components is not None:
            object.__setattr__(self, "components", tuple(int(c) for c in self.components))
            if int(np.prod(self.components)) != self.cardinality:
                raise InvalidNet(f"node {self.id}: components {self.components} do not multiply to {self.cardinality}")


@dataclass(frozen=True, eq=False)
class BayesNet:
    kind: str
    nodes: tuple[Node, ...]

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if self.kind not in (CLASSICAL, QUANTUM):
            raise InvalidNet(f"unknown net kind {self.kind!r}")
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise InvalidNet(f"duplicate node ids in {ids}")
        card = {n.id: n.cardinality for n in self.nodes}
        for n in self.nodes:
            for p in n.parents:
                if p not in card:
                    raise InvalidNet(f"node {n.id}: unknown parent {p!r}")
            expected = (n.cardinality, *(card[p] for p in n.parents))
            if n.table.shape != expected:
                raise InvalidNet(f"node {n.id}: table shape {n.table.shape}, expected {expected}")
        self.topological_order()

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes)

    def node(self, node_id: str) -> Node:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    @property
    def labels(self) -> tuple[tuple[str, int], ...]:
        return tuple((n.id, n.cardinality) for n in self.nodes)

    def topological_order(self) -> list[str]:
        parents = {n.id: set(n.parents) for n in self.nodes}
        order: list[str] = []
        done: set[str] = set()
        while len(order) < len(self.nodes):
            ready = [n.id for n in self.nodes if n.id not in done and parents[n.id] <= done]
            if not ready:
                raise InvalidNet("graph has a cycle")
            for r in ready:
                order.append(r)
                done.add(r)
        return order


@dataclass(frozen=True)
class Violation:
    node: str
    parent_config: tuple[int, ...]
    residual: float
    message: str


def validate(net: BayesNet, tol: float = DEFAULT_TOL) -> list[Violation]:
    """Every normalization violation; empty iff the net is valid."""
    out: list[Violation] = []
    for n in net.nodes:
        t = n.table
        cols = t.reshape(n.cardinality, -1)
        parent_cards = t.shape[1:]
        if net.kind == CLASSICAL:
            if np.iscomplexobj(t) and np.max(np.abs(t.imag), initial=0.0) > tol:
                out.append(Violation(n.id, (), float(np.max(np.abs(t.imag))), "complex entry in a probability table"))
            real = cols.real
            sums = real.sum(axis=0)
            neg = real.min(axis=0)
        else:
            sums = (np.abs(cols) ** 2).sum(axis=0)
            neg = np.zeros(cols.shape[1])
        for k in range(cols.shape[1]):
            config = tuple(int(v) for v in np.unravel_index(k, parent_cards)) if parent_cards else ()
            resid = abs(float(sums[k]) - 1.0)
            if resid > tol:
                what = "probabilities" if net.kind == CLASSICAL else "squared amplitudes"
                out.append(Violation(n.id, config, resid, f"{what} sum to {float(sums[k])!r}"))
            if neg[k] < -tol:
                out.append(Violation(n.id, config, float(-neg[k]), "negative probability"))
    return out


def _require_valid(net: BayesNet, kind: str, tol: float) -> None:
    if net.kind != kind:
        raise InvalidNet(f"expected a {kind} net, got {net.kind}")
    bad = validate(net, tol)
    if bad:
        v = bad[0]
        raise InvalidNet(f"node {v.node} at parent config {v.parent_config}: {v.message}")


def _product_tensor(net: BayesNet) -> np.ndarray:
    axis = {nid: k for k, nid in enumerate(net.ids)}
    operands: list = []
    for n in net.nodes:
        operands += [n.table, [axis[n.id], *(axis[p] for p in n.parents)]]
    return np.einsum(*operands, list(range(len(net.nodes))))


def joint_distribution(net: BayesNet, tol: float = DEFAULT_TOL) -> np.ndarray:
    """P(x_1, ..., x_N) = prod_nodes P(x_node | parents), axes in node order."""
    _require_valid(net, CLASSICAL, tol)
    return np.real(_product_tensor(net)).astype(float)


def classical_state(net: BayesNet, tol: float = DEFAULT_TOL) -> LabeledState:
    return LabeledState.classical(joint_distribution(net, tol), net.labels, tol=1e-9)


def meta_state(net: BayesNet, tol: float = DEFAULT_TOL) -> LabeledState:
    """Pure meta state whose amplitudes are products of node amplitudes."""
    _require_valid(net, QUANTUM, tol)
    dim = int(np.prod([n.cardinality for n in net.nodes]))
    if dim > MAX_META_DIM:
        raise InvalidNet(f"meta state dimension {dim} exceeds cap {MAX_META_DIM}")
    amps = _product_tensor(net).astype(complex)
    return LabeledState.pure(amps, net.labels, tol=1e-9)


def state_of(net: BayesNet, tol: float = DEFAULT_TOL) -> LabeledState:
    """Joint distribution (CB) or meta state (QB) as a labeled state."""
    return classical_state(net, tol) if net.kind == CLASSICAL else meta_state(net, tol)


def meta_state_by_enumeration(net: BayesNet) -> np.ndarray:
    """Reference construction looping over every configuration explicitly."""
    cards = [n.cardinality for n in net.nodes]
    pos = {nid: k for k, nid in enumerate(net.ids)}
    out = np.zeros(cards, dtype=complex)
    for config in itertools.product(*(range(c) for c in cards)):
        amp = 1.0 + 0j
        for n in net.nodes:
            amp *= n.table[(config[pos[n.id]], *(config[pos[p]] for p in n.parents))]
            if amp == 0:
                break
        out[config] = amp
    return out


# ----------------------------------------------------------------- builders


def copy_table(card: int, components: Sequence[int], which: int) -> np.ndarray:
    """delta(x, e_which) for a compound parent e with the given components."""
    total = int(np.prod(components))
    t = np.zeros((card, total))
    for e in range(total):
        t[decode_compound(e, components)[which], e] = 1.0
    return t


def identity_table(card: int) -> np.ndarray:
    return np.eye(card)


def _check_norm(vec, what: str, quantum: bool, tol: float = 1e-8) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex if quantum else float)
    total = np.sum(np.abs(vec) ** 2) if quantum else np.sum(vec)
    if abs(total - 1.0) > tol:
        raise BadParams(f"{what} is not normalized (sum {total!r})")
    if not quantum and vec.min() < -tol:
        raise BadParams(f"{what} has negative entries")
    return vec


def _weights(w, tol: float = 1e-8) -> np.ndarray:
    return _check_norm(np.asarray(w, dtype=float), "weights", quantum=False, tol=tol)


def _square(m, n: int, what: str) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.shape != (n, n):
        raise BadParams(f"{what} has shape {m.shape}, expected {(n, n)}")
    return m


def build_fig1(p_lambda, p_a, p_b) -> BayesNet:
    p_lambda = _weights(p_lambda)
    n = len(p_lambda)
    p_a, p_b = np.asarray(p_a, dtype=float), np.asarray(p_b, dtype=float)
    if p_a.ndim != 2 or p_a.shape[1] != n or p_b.ndim != 2 or p_b.shape[1] != n:
        raise BadParams("P(a|lambda) and P(b|lambda) must be (card, N_lambda) tables")
    return BayesNet(CLASSICAL, (
        Node("lam", n, (), p_lambda),
        Node("a", p_a.shape[0], ("lam",), p_a),
        Node("b", p_b.shape[0], ("lam",), p_b),
    ))


def build_fig3(psi0, U=None, V=None) -> BayesNet:
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.ndim != 2:
        raise BadParams("psi0 must be a matrix")
    nx, ny = psi0.shape
    _check_norm(psi0.ravel(), "psi0", quantum=True)
    U = np.eye(nx) if U is None else _square(U, nx, "U")
    V = np.eye(ny) if V is None else _square(V, ny, "V")
    psi = U @ psi0 @ V.conj().T
    comps = (nx, ny)
    return BayesNet(QUANTUM, (
        Node("e", nx * ny, (), psi.ravel(), components=comps),
        Node("x", nx, ("e",), copy_table(nx, comps, 0)),
        Node("y", ny, ("e",), copy_table(ny, comps, 1)),
    ))


def build_fig4(w, alphas) -> BayesNet:
    """Conditionally separable net; ``alphas[k][q, r, a]`` is branch k's amplitude."""
    w = _weights(w)
    na = len(w)
    jbar = np.zeros(na * na)
    for a in range(na):
        jbar[encode_compound((a, a), (na, na))] = np.sqrt(w[a])
    nodes = [
        Node("jbar", na * na, (), jbar.astype(complex), components=(na, na)),
        Node("a", na, ("jbar",), copy_table(na, (na, na), 0)),
        Node("rbar", na, ("jbar",), copy_table(na, (na, na), 1)),
    ]
    if len(alphas) < 1:
        raise BadParams("need at least one branch")
    for k, alpha in enumerate(alphas, start=1):
        alpha = np.asarray(alpha, dtype=complex)
        if alpha.ndim != 3 or alpha.shape[2] != na:
            raise BadParams(f"alpha_{k} must have shape (N_q, N_r, {na})")
        nq, nr, _ = alpha.shape
        for a in range(na):
            _check_norm(alpha[:, :, a].ravel(), f"alpha_{k}(.|a={a})", quantum=True)
        comps = (nq, nr)
        nodes += [
            Node(f"j{k}", nq * nr, ("a",), alpha.reshape(nq * nr, na), components=comps),
            Node(f"q{k}", nq, (f"j{k}",), copy_table(nq, comps, 0)),
            Node(f"r{k}", nr, (f"j{k}",), copy_table(nr, comps, 1)),
        ]
    return BayesNet(QUANTUM, tuple(nodes))


def build_fig5(w, psis) -> BayesNet:
    w = _weights(w)
    psis = [np.asarray(p, dtype=complex) for p in psis]
    if len(psis) != len(w):
        raise BadParams(f"{len(w)} weights but {len(psis)} states")
    shape = psis[0].shape
    if any(p.shape != shape for p in psis) or len(shape) != 2:
        raise BadParams("all psi_f must be matrices of the same shape")
    for f, p in enumerate(psis):
        _check_norm(p.ravel(), f"psi_{f}", quantum=True)
    nx, ny = shape
    comps = (nx, ny)
    e_table = np.stack([p.ravel() for p in psis], axis=1)
    return BayesNet(QUANTUM, (
        Node("f", len(w), (), np.sqrt(w).astype(complex)),
        Node("e", nx * ny, ("f",), e_table, components=comps),
        Node("x", nx, ("e",), copy_table(nx, comps, 0)),
        Node("y", ny, ("e",), copy_table(ny, comps, 1)),
    ))


def build_fig6(p_e, channels) -> BayesNet:
    """One speaker e and n listener nodes x_k with tables P(x_k | e)."""
    p_e = _weights(p_e)
    nodes = [Node("e", len(p_e), (), p_e)]
    for k, ch in enumerate(channels, start=1):
        ch = np.asarray(ch, dtype=float)
        if ch.ndim != 2 or ch.shape[1] != len(p_e):
            raise BadParams(f"channel {k} must have shape (N_x, {len(p_e)})")
        nodes.append(Node(f"x{k}", ch.shape[0], ("e",), ch))
    return BayesNet(CLASSICAL, tuple(nodes))


def build_fig9(root, channels, kind: str = QUANTUM, names: Sequence[tuple[str, str]] | None = None) -> BayesNet:
    """Speaker e = (e_1..e_n), copy nodes x_k = e_k, and channel nodes a_k | x_k.

    ``root`` holds amplitudes (quantum) or probabilities (classical) with one
    axis per branch; ``channels[k][a, x]`` is the branch-k transition table.
    """
    quantum = kind == QUANTUM
    root = np.asarray(root, dtype=complex if quantum else float)
    comps = root.shape
    n = len(comps)
    if n < 2 or len(channels) != n:
        raise BadParams("need n >= 2 branches with one channel table each")
    _check_norm(root.ravel(), "speaker table", quantum=quantum)
    names = names or [(f"x{k}", f"a{k}") for k in range(1, n + 1)]
    nodes = [Node("e", int(np.prod(comps)), (), root.ravel(), components=comps)]
    tail = []
    for k, ((xn, an), ch) in enumerate(zip(names, channels)):
        ch = np.asarray(ch, dtype=complex if quantum else float)
        if ch.ndim != 2 or ch.shape[1] != comps[k]:
            raise BadParams(f"channel {k + 1} must have shape (N_a, {comps[k]})")
        nodes.append(Node(xn, comps[k], ("e",), copy_table(comps[k], comps, k)))
        tail.append(Node(an, ch.shape[0], (xn,), ch))
    return BayesNet(kind, tuple(nodes + tail))


def build_fig7(root, A, B, kind: str = QUANTUM) -> BayesNet:
    """Two-branch case of :func:`build_fig9` with node ids e, x, y, a, b."""
    return build_fig9(root, [A, B], kind=kind, names=[("x", "a"), ("y", "b")])


_BUILDERS = {
    "fig1": build_fig1,
    "fig3": build_fig3,
    "fig4": build_fig4,
    "fig5": build_fig5,
    "fig6": build_fig6,
    "fig7": build_fig7,
    "fig9": build_fig9,
}


def build_canonical_net(kind: str, **params) -> BayesNet:
    try:
        builder = _BUILDERS[kind]
    except KeyError:
        raise BadParams(f"unknown net kind {kind!r}; choose from {sorted(_BUILDERS)}") from None
    try:
        return builder(**params)
    except TypeError as exc:
        raise BadParams(str(exc)) from None


def canonical_kinds() -> list[str]:
    return sorted(_BUILDERS)


# ------------------------------------------------------------ random nets


def random_fig9(rng: np.random.Generator, n: int, kind: str = QUANTUM, x_card: int = 2, a_card: int = 2) -> BayesNet:
    comps = (x_card,) * n
    if kind == QUANTUM:
        root = random_amplitudes(rng, comps)
        channels = [random_amplitude_table(rng, a_card, (x_card,)) for _ in range(n)]
    else:
        root = random_simplex(rng, x_card**n).reshape(comps)
        channels = [random_stochastic_table(rng, a_card, (x_card,)) for _ in range(n)]
    if n == 2:
        return build_fig7(root, *channels, kind=kind)
    return build_fig9(root, channels, kind=kind)


def random_net(
    rng: np.random.Generator,
    kind: str,
    n_nodes: int,
    cards: Sequence[int] | int = 2,
    max_parents: int = 2,
    prefix: str = "v",
) -> BayesNet:
    """Random DAG on nodes v0..v{n-1} (edges only from lower to higher index)."""
    if isinstance(cards, int):
        cards = [cards] * n_nodes
    nodes = []
    for k in range(n_nodes):
        m = int(rng.integers(0, min(k, max_parents) + 1))
        parents = sorted(rng.choice(k, size=m, replace=False).tolist()) if m else []
        pids = tuple(f"{prefix}{p}" for p in parents)
        pc = tuple(cards[p] for p in parents)
        if kind == QUANTUM:
            table = random_amplitude_table(rng, cards[k], pc)
        else:
            table = random_stochastic_table(rng, cards[k], pc)
        nodes.append(Node(f"{prefix}{k}", cards[k], pids, table))
    return BayesNet(kind, tuple(nodes))


# ---------------------------------------------------------- serialization


def _encode_table(table: np.ndarray, kind: str) -> list:
    flat = np.asarray(table).ravel()
    if kind == CLASSICAL:
        return [float(v) for v in flat.real]
    return [[float(v.real), float(v.imag)] for v in flat.astype(complex)]


def _decode_table(values, shape) -> np.ndarray:
    if values and isinstance(values[0], (list, tuple)):
        arr = np.array([complex(re, im) for re, im in values])
    else:
        arr = np.array(values, dtype=float)
    if arr.size != int(np.prod(shape)):
        raise InvalidNet(f"table has {arr.size} entries, expected {int(np.prod(shape))}")
    return arr.reshape(shape)


def net_to_dict(net: BayesNet) -> dict:
    nodes = []
    for n in net.nodes:
        d = {"id": n.id, "cardinality": n.cardinality, "parents": list(n.parents), "table": _encode_table(n.table, net.kind)}
        if n.components is not None:
            d["components"] = list(n.components)
        nodes.append(d)
    return {"kind": net.kind, "nodes": nodes}


def net_from_dict(doc: dict) -> BayesNet:
    try:
        kind = doc["kind"]
        card = {d["id"]: int(d["cardinality"]) for d in doc["nodes"]}
        nodes = []
        for d in doc["nodes"]:
            shape = (card[d["id"]], *(card[p] for p in d.get("parents", [])))
            nodes.append(Node(d["id"], card[d["id"]], tuple(d.get("parents", [])), _decode_table(d["table"], shape), d.get("components")))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidNet(f"malformed net document: {exc}") from None
    return BayesNet(kind, tuple(nodes))


def dumps(net: BayesNet, **kwargs) -> str:
    return json.dumps(net_to_dict(net), **kwargs)


def loads(text: str) -> BayesNet:
    return net_from_dict(json.loads(text))
