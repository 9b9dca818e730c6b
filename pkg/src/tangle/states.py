"""Labeled states over named tensor factors, reductions, and entropic quantities.

A :class:`LabeledState` is a pure amplitude vector, a density matrix, or a
classical probability tensor (a diagonal density matrix stored by its
diagonal). All three share one entropy code path, so every identity that
holds for Shannon entropies is checked with von Neumann entropies as well.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import BadPartition, NotDensityMatrix, NotRepeated, UnknownLabel
from .numkit import DEFAULT_TOL, clamp_spectrum, shannon_entropy

PURE, DENSITY, CLASSICAL = "pure", "density", "classical"

# Diagonal weight below which a pair of equal factors is fused automatically.
_AUTO_COMPRESS_MASS = 1e-24


def _normalize_labels(labels) -> tuple[tuple[str, int], ...]:
    if isinstance(labels, dict):
        labels = labels.items()
    out = tuple((str(name), int(card)) for name, card in labels)
    names = [n for n, _ in out]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate labels in {names}")
    if any(c < 1 for _, c in out):
        raise ValueError("cardinalities must be positive")
    return out


def as_collection(ids) -> frozenset[str]:
    if isinstance(ids, str):
        return frozenset([ids])
    return frozenset(str(i) for i in ids)


@dataclass(frozen=True, eq=False)
class LabeledState:
    labels: tuple[tuple[str, int], ...]
    form: str
    data: np.ndarray

    @classmethod
    def pure(cls, amplitudes, labels, tol: float = DEFAULT_TOL, check: bool = True) -> "LabeledState":
        labels = _normalize_labels(labels)
        vec = np.asarray(amplitudes, dtype=complex).ravel()
        s = cls(labels, PURE, vec)
        if check:
            s.check(tol)
        return s

    @classmethod
    def density(cls, rho, labels, tol: float = DEFAULT_TOL, check: bool = True) -> "LabeledState":
        labels = _normalize_labels(labels)
        rho = np.asarray(rho, dtype=complex)
        s = cls(labels, DENSITY, rho)
        if check:
            s.check(tol)
        return s

    @classmethod
    def classical(cls, probs, labels, tol: float = DEFAULT_TOL, check: bool = True) -> "LabeledState":
        labels = _normalize_labels(labels)
        p = np.asarray(probs, dtype=float).ravel()
        s = cls(labels, CLASSICAL, p)
        if check:
            s.check(tol)
        return s

    def __post_init__(self):
        dim = self.dim
        if self.form == DENSITY:
            ok = self.data.shape == (dim, dim)
        elif self.form in (PURE, CLASSICAL):
            ok = self.data.shape == (dim,)
        else:
            raise ValueError(f"unknown form {self.form!r}")
        if not ok:
            raise ValueError(f"data shape {self.data.shape} does not match label dimension {dim}")

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.labels)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(c for _, c in self.labels)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims)) if self.labels else 1

    def axis(self, name: str) -> int:
        try:
            return self.ids.index(name)
        except ValueError:
            raise UnknownLabel(f"label {name!r} not in {self.ids}") from None

    def trace(self) -> float:
        if self.form == PURE:
            return float(np.vdot(self.data, self.data).real)
        if self.form == CLASSICAL:
            return float(self.data.sum())
        return float(np.trace(self.data).real)

    def density_matrix(self) -> np.ndarray:
        if self.form == PURE:
            return np.outer(self.data, self.data.conj())
        if self.form == CLASSICAL:
            return np.diag(self.data.astype(complex))
        return self.data

    def tensor(self) -> np.ndarray:
        """Data reshaped with one axis per factor (two per factor for densities)."""
        if self.form == DENSITY:
            return self.data.reshape(self.dims + self.dims)
        return self.data.reshape(self.dims)

    def check(self, tol: float = DEFAULT_TOL) -> None:
        """Raise NotDensityMatrix unless this is a valid normalized state."""
        tr = self.trace()
        if abs(tr - 1.0) > tol:
            raise NotDensityMatrix(f"trace/norm is {tr!r}, not 1")
        if self.form == CLASSICAL:
            if self.data.size and self.data.min() < -tol:
                raise NotDensityMatrix(f"negative probability {self.data.min()!r}")
        elif self.form == DENSITY:
            herm = np.max(np.abs(self.data - self.data.conj().T), initial=0.0)
            if herm > tol:
                raise NotDensityMatrix(f"not Hermitian: residual {herm:.3g}")
            clamp_spectrum(np.linalg.eigvalsh(0.5 * (self.data + self.data.conj().T)))

    def __repr__(self) -> str:
        return f"LabeledState({self.form}, {dict(self.labels)})"


def _check_subset(s: LabeledState, names: Iterable[str]) -> list[str]:
    names = list(names)
    for n in names:
        s.axis(n)
    return names


def _split_axes(s: LabeledState, over: frozenset[str]) -> tuple[list[int], list[int]]:
    keep = [i for i, n in enumerate(s.ids) if n not in over]
    drop = [i for i, n in enumerate(s.ids) if n in over]
    return keep, drop


def _dim(s: LabeledState, axes: Sequence[int]) -> int:
    return int(np.prod([s.dims[i] for i in axes])) if axes else 1


def _grouped_matrix(s: LabeledState, keep: list[int], drop: list[int]) -> np.ndarray:
    """Pure amplitudes as a (kept, dropped) matrix."""
    t = s.tensor().transpose(keep + drop)
    return t.reshape(_dim(s, keep), _dim(s, drop))


def _grouped_density(s: LabeledState, keep: list[int], drop: list[int]) -> np.ndarray:
    """Density tensor with axes (kept, dropped, kept', dropped')."""
    k = len(s.labels)
    t = s.tensor().transpose(keep + drop + [k + i for i in keep] + [k + i for i in drop])
    dk, dd = _dim(s, keep), _dim(s, drop)
    return t.reshape(dk, dd, dk, dd)


def partial_trace(s: LabeledState, over) -> LabeledState:
    over = as_collection(over)
    _check_subset(s, over)
    if not over:
        return s
    keep, drop = _split_axes(s, over)
    labels = tuple(s.labels[i] for i in keep)
    if s.form == CLASSICAL:
        p = s.tensor().sum(axis=tuple(drop)) if drop else s.tensor()
        return LabeledState(labels, CLASSICAL, np.asarray(p, dtype=float).ravel())
    if s.form == PURE:
        m = _grouped_matrix(s, keep, drop)
        return LabeledState(labels, DENSITY, m @ m.conj().T)
    t = _grouped_density(s, keep, drop)
    return LabeledState(labels, DENSITY, np.einsum("iaja->ij", t))


def e_sum(s: LabeledState, over) -> LabeledState:
    """Coherent elimination: contract ket and bra indices of each named factor with all-ones.

    No renormalization is performed.
    """
    over = as_collection(over)
    _check_subset(s, over)
    if not over:
        return s
    keep, drop = _split_axes(s, over)
    labels = tuple(s.labels[i] for i in keep)
    if s.form == CLASSICAL:
        # a diagonal state has no coherences, so e-sum and trace agree
        return partial_trace(s, over)
    if s.form == PURE:
        vec = _grouped_matrix(s, keep, drop).sum(axis=1)
        return LabeledState(labels, PURE, vec)
    t = _grouped_density(s, keep, drop)
    return LabeledState(labels, DENSITY, t.sum(axis=(1, 3)))


def marginal(s: LabeledState, of) -> LabeledState:
    """Reduction of ``s`` to the factors in ``of``."""
    of = as_collection(of)
    _check_subset(s, of)
    return partial_trace(s, frozenset(s.ids) - of)


def _off_support_mask(s: LabeledState, ia: int, ib: int) -> np.ndarray:
    shape = s.dims
    grids = np.indices(shape)
    return (grids[ia] != grids[ib]).ravel()


def compress_repeated(s: LabeledState, pair, tol: float = DEFAULT_TOL) -> LabeledState:
    """Fuse two factors whose values coincide on the support of ``s``.

    The fused factor keeps the first label. Nonzero spectrum (and hence
    entropy) is unchanged.
    """
    a, b = (str(p) for p in pair)
    ia, ib = s.axis(a), s.axis(b)
    if ia == ib:
        raise NotRepeated("a factor cannot be paired with itself")
    if s.dims[ia] != s.dims[ib]:
        raise NotRepeated(f"cardinalities differ: {s.dims[ia]} vs {s.dims[ib]}")
    off = _off_support_mask(s, ia, ib)
    if s.form == DENSITY:
        leak = max(np.max(np.abs(s.data[off, :]), initial=0.0), np.max(np.abs(s.data[:, off]), initial=0.0))
    else:
        leak = np.max(np.abs(s.data[off]), initial=0.0)
    if leak > tol:
        raise NotRepeated(f"weight {leak:.3g} off the repeated-index support")
    labels = tuple(lab for i, lab in enumerate(s.labels) if i != ib)
    k = len(s.labels)
    if s.form == DENSITY:
        t = s.tensor()
        t = np.diagonal(t, axis1=ia, axis2=ib)
        t = np.moveaxis(t, -1, ia if ia < ib else ia - 1)
        # bra axes have shifted down by one after removing the ket axis ib
        ja, jb = k - 1 + ia, k - 1 + ib
        t = np.diagonal(t, axis1=ja, axis2=jb)
        t = np.moveaxis(t, -1, ja if ia < ib else ja - 1)
        d = int(np.prod([c for _, c in labels])) if labels else 1
        return LabeledState(labels, DENSITY, np.ascontiguousarray(t).reshape(d, d))
    t = np.diagonal(s.tensor(), axis1=ia, axis2=ib)
    t = np.moveaxis(t, -1, ia if ia < ib else ia - 1)
    return LabeledState(labels, s.form, np.ascontiguousarray(t).ravel())


def _auto_compress(s: LabeledState) -> LabeledState:
    """Fuse every factor pair whose values always coincide."""
    if s.form == CLASSICAL or len(s.labels) < 2:
        return s
    changed = True
    while changed:
        changed = False
        diag = np.abs(s.data) ** 2 if s.form == PURE else np.abs(np.diagonal(s.data))
        for ia, ib in itertools.combinations(range(len(s.labels)), 2):
            if s.dims[ia] != s.dims[ib] or s.dims[ia] == 1:
                continue
            if diag[_off_support_mask(s, ia, ib)].sum() <= _AUTO_COMPRESS_MASS:
                s = compress_repeated(s, (s.ids[ia], s.ids[ib]), tol=np.inf)
                changed = True
                break
    return s


def _spectrum(s: LabeledState, of: frozenset[str], tol: float) -> np.ndarray:
    keep, drop = _split_axes(s, frozenset(s.ids) - of)
    if s.form == PURE:
        m = _grouped_matrix(s, keep, drop)
        gram = m @ m.conj().T if m.shape[0] <= m.shape[1] else m.T @ m.conj()
        return np.linalg.eigvalsh(gram)
    red = _auto_compress(partial_trace(s, frozenset(s.ids) - of))
    if red.form == CLASSICAL:
        return red.data
    if red.form == PURE:
        return np.array([red.trace()])
    rho = red.data
    return np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))


def _entropy_of_spectrum(values: np.ndarray, tol: float) -> float:
    total = float(np.sum(values))
    if abs(total - 1.0) > tol:
        raise NotDensityMatrix(f"reduced state has trace {total!r}, not 1")
    values = clamp_spectrum(values, tol)
    return shannon_entropy(values / values.sum(), tol)


class EntropyCache:
    """Memoized joint entropies of one state, scoped to a single evaluation."""

    def __init__(self, state: LabeledState, tol: float = DEFAULT_TOL):
        self.state = state
        self.tol = tol
        self._memo: dict[frozenset[str], float] = {}

    def __call__(self, of) -> float:
        of = as_collection(of)
        if not of:
            return 0.0
        hit = self._memo.get(of)
        if hit is None:
            _check_subset(self.state, of)
            hit = _entropy_of_spectrum(_spectrum(self.state, of, self.tol), self.tol)
            self._memo[of] = hit
        return hit


def entropy(s: LabeledState, of=None, tol: float = DEFAULT_TOL) -> float:
    """Joint (von Neumann or Shannon) entropy of the factors ``of``, in bits."""
    of = frozenset(s.ids) if of is None else as_collection(of)
    return EntropyCache(s, tol)(of)


@dataclass(frozen=True)
class ListenerPartition:
    listeners: tuple[frozenset[str], ...]
    speaker: frozenset[str] = frozenset()

    @classmethod
    def of(cls, listeners, speaker=()) -> "ListenerPartition":
        return cls(tuple(as_collection(x) for x in listeners), as_collection(speaker))

    def validate(self, s: LabeledState | None = None) -> None:
        if len(self.listeners) < 2:
            raise BadPartition("need at least two listeners")
        seen: set[str] = set(self.speaker)
        for lst in self.listeners:
            if not lst:
                raise BadPartition("empty listener")
            if seen & lst:
                raise BadPartition(f"listener {sorted(lst)} overlaps another collection")
            seen |= lst
        if s is not None:
            missing = seen - set(s.ids)
            if missing:
                raise BadPartition(f"unknown nodes {sorted(missing)}")


def _partition(p, speaker) -> ListenerPartition:
    if isinstance(p, ListenerPartition):
        return p
    return ListenerPartition.of(p, speaker or ())


def cmi_from_entropies(h: EntropyCache, p: ListenerPartition) -> float:
    n = len(p.listeners)
    total = -h(p.speaker)
    for size in range(1, n + 1):
        sign = 1.0 if size % 2 else -1.0
        for gamma in itertools.combinations(p.listeners, size):
            total += sign * h(frozenset().union(*gamma) | p.speaker)
    return total


def tanglement_from_entropies(h: EntropyCache, p: ListenerPartition) -> float:
    e = p.speaker
    h_e = h(e)
    total = sum(h(lst | e) - h_e for lst in p.listeners)
    return total - (h(frozenset().union(*p.listeners) | e) - h_e)


def cmi(s: LabeledState, p, speaker=None, tol: float = DEFAULT_TOL) -> float:
    """Conditional mutual information H(L1 : ... : Ln | E) in bits.

    ``p`` is a :class:`ListenerPartition` or a list of listener collections
    (with ``speaker`` given separately). An empty speaker gives the
    unconditioned n-part mutual information.
    """
    p = _partition(p, speaker)
    p.validate(s)
    return cmi_from_entropies(EntropyCache(s, tol), p)


def tanglement(s: LabeledState, p, speaker=None, tol: float = DEFAULT_TOL) -> float:
    """Sum_i S(L_i|E) - S(L_1, ..., L_n|E) in bits; the speaker must be non-empty."""
    p = _partition(p, speaker)
    p.validate(s)
    if not p.speaker:
        raise BadPartition("tanglement needs a non-empty speaker")
    return tanglement_from_entropies(EntropyCache(s, tol), p)


def mutual_information(s: LabeledState, parts, tol: float = DEFAULT_TOL) -> float:
    return cmi(s, ListenerPartition.of(parts, ()), tol=tol)


def conditional_mutual_information(s: LabeledState, a, b, given=(), tol: float = DEFAULT_TOL) -> float:
    """Two-party I(a : b | given)."""
    return cmi(s, ListenerPartition.of([a, b], given), tol=tol)


def product_state(*states: LabeledState) -> LabeledState:
    """Tensor product; classical only if every factor is classical."""
    labels = tuple(lab for st in states for lab in st.labels)
    if all(st.form == CLASSICAL for st in states):
        p = np.ones(1)
        for st in states:
            p = np.kron(p, st.data)
        return LabeledState(_normalize_labels(labels), CLASSICAL, p)
    if all(st.form == PURE for st in states):
        v = np.ones(1, dtype=complex)
        for st in states:
            v = np.kron(v, st.data)
        return LabeledState(_normalize_labels(labels), PURE, v)
    rho = np.ones((1, 1), dtype=complex)
    for st in states:
        rho = np.kron(rho, st.density_matrix())
    return LabeledState(_normalize_labels(labels), DENSITY, rho)


def conditionally_separable_state(weights, blocks, speaker: str = "E", listeners: Sequence[str] | None = None) -> LabeledState:
    """sum_E w_E |E><E| (x) rho_E^(1) (x) ... (x) rho_E^(n).

    ``blocks[E][k]`` is the density matrix of listener k given speaker value E.
    """
    weights = np.asarray(weights, dtype=float)
    n = len(blocks[0])
    listeners = list(listeners) if listeners is not None else [f"X{k + 1}" for k in range(n)]
    dims = [np.asarray(b).shape[0] for b in blocks[0]]
    total = None
    for e, w in enumerate(weights):
        proj = np.zeros((len(weights), len(weights)))
        proj[e, e] = w
        term = proj.astype(complex)
        for b in blocks[e]:
            term = np.kron(term, np.asarray(b, dtype=complex))
        total = term if total is None else total + term
    labels = [(speaker, len(weights))] + list(zip(listeners, dims))
    return LabeledState.density(total, labels)
