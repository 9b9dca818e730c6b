"""Entanglement of formation and closed-form S-tanglement results."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import NotBipartite, NotNormalized, RankExceedsEnsemble, ShapeMismatch
from .numkit import (
    DEFAULT_TOL,
    binary_entropy,
    expm_skew,
    hermitian_eigh,
    shannon_entropy,
    svd,
    von_neumann_entropy,
)
from .sampling import random_unitary
from .states import LabeledState, as_collection

LN2 = np.log(2.0)
SQRT_HALF = 1.0 / np.sqrt(2.0)


def _normalized_matrix(psi, tol: float) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 2:
        raise ShapeMismatch(f"expected an amplitude matrix, got shape {psi.shape}")
    norm2 = float(np.sum(np.abs(psi) ** 2))
    if abs(norm2 - 1.0) > tol:
        raise NotNormalized(f"squared Frobenius norm is {norm2!r}, not 1")
    return psi


def schmidt_spectrum(psi, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Squared singular values p_x of a normalized amplitude matrix, descending."""
    psi = _normalized_matrix(psi, tol)
    if psi.shape[0] > psi.shape[1]:
        psi = psi.T
    _, s, _ = svd(psi)
    p = s**2
    return p / p.sum()


def ef_pure(psi, tol: float = DEFAULT_TOL) -> float:
    """E_F of a bipartite pure state given by its amplitude matrix psi[x, y]."""
    return shannon_entropy(schmidt_spectrum(psi, tol), tol)


class TwoQubitT(NamedTuple):
    t: float
    p0: float
    ef: float


def _two_qubit(psi, tol: float) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.size != 4:
        raise ShapeMismatch("two-qubit amplitudes need exactly four entries")
    return _normalized_matrix(psi.reshape(2, 2), tol)


def p0_of_t(t: float) -> float:
    return 0.5 * (1.0 + np.sqrt(max(0.0, 1.0 - t)))


def two_qubit_t(psi, tol: float = DEFAULT_TOL) -> TwoQubitT:
    """t = 4|psi00 psi11 - psi01 psi10|^2 with p0(t) and E_F = h(p0)."""
    m = _two_qubit(psi, tol)
    t = float(4.0 * abs(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]) ** 2)
    t = min(max(t, 0.0), 1.0)
    p0 = p0_of_t(t)
    return TwoQubitT(t, p0, binary_entropy(min(p0, 1.0)))


def bell_state(f: int | tuple[int, int]) -> np.ndarray:
    """Amplitude matrix <x,y|B_f> with B_f = i^(f0+f1)/sqrt2 (|0,f0> + (-1)^f1 |1,not f0>)."""
    f0, f1 = (f // 2, f % 2) if isinstance(f, (int, np.integer)) else f
    m = np.zeros((2, 2), dtype=complex)
    m[0, f0] = 1.0
    m[1, 1 - f0] = (-1.0) ** f1
    return (1j ** (f0 + f1)) * SQRT_HALF * m


def bell_basis() -> np.ndarray:
    """Columns are the flattened Bell states B_00, B_01, B_10, B_11."""
    return np.stack([bell_state(f).ravel() for f in range(4)], axis=1)


def bell_components(psi, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Components alpha_j of psi in the Bell basis, j = 2 f0 + f1."""
    m = _two_qubit(psi, tol)
    return bell_basis().conj().T @ m.ravel()


def from_bell_components(alpha) -> np.ndarray:
    return (bell_basis() @ np.asarray(alpha, dtype=complex)).reshape(2, 2)


def _bell_weights(w, tol: float) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (4,):
        raise ShapeMismatch("Bell weights need four entries")
    if abs(w.sum() - 1.0) > tol or w.min() < -tol:
        raise NotNormalized(f"Bell weights {w.tolist()} are not a probability vector")
    return np.clip(w, 0.0, None)


def bell_diagonal_state(w, tol: float = DEFAULT_TOL) -> np.ndarray:
    """rho = sum_f w_f |B_f><B_f| as a 4x4 matrix over (x, y)."""
    w = _bell_weights(w, tol)
    b = bell_basis()
    return (b * w) @ b.conj().T


def ef_bell_diagonal(w, tol: float = DEFAULT_TOL) -> float:
    w = _bell_weights(w, tol)
    big = float(w.max())
    if big <= 0.5:
        return 0.0
    return binary_entropy(0.5 * (1.0 + np.sqrt(max(0.0, 1.0 - 4.0 * (big - 0.5) ** 2))))


def st_bell_diagonal(w, tol: float = DEFAULT_TOL) -> float:
    """h(w00 + w01) + 1 - H(w)."""
    w = _bell_weights(w, tol)
    w0 = min(1.0, float(w[0] + w[1]))
    return binary_entropy(w0) + 1.0 - shannon_entropy(w / w.sum(), tol)


def st_general_mixed(w, psis: Sequence, tol: float = DEFAULT_TOL) -> float:
    """S-tanglement of the copy net fed by a mixture of pure states, from its four-term closed form.

    H(x:y) + sum_x P(x) S[rho(x)] + sum_y P(y) S[rho(y)] - S(sum_f w_f |psi_f><psi_f|).
    """
    w = np.asarray(w, dtype=float)
    if abs(w.sum() - 1.0) > tol or w.min() < -tol:
        raise NotNormalized("mixture weights are not a probability vector")
    psis = [np.asarray(p, dtype=complex) for p in psis]
    if len(psis) != len(w) or len({p.shape for p in psis}) != 1 or psis[0].ndim != 2:
        raise ShapeMismatch("need one amplitude matrix of common shape per weight")
    for p in psis:
        _normalized_matrix(p, tol)
    stack = np.stack(psis)  # (f, x, y)
    pxy = np.einsum("f,fxy->xy", w, np.abs(stack) ** 2)
    px, py = pxy.sum(axis=1), pxy.sum(axis=0)
    mutual = shannon_entropy(px, tol) + shannon_entropy(py, tol) - shannon_entropy(pxy, tol)
    total = mutual
    # rho(y)[x, x'] = sum_f w_f psi_f(x, y) psi_f(x', y)^* / P(y), and likewise rho(x)
    for y in range(stack.shape[2]):
        if py[y] > 0:
            block = np.einsum("f,fa,fb->ab", w, stack[:, :, y], stack[:, :, y].conj())
            total += py[y] * von_neumann_entropy(block / py[y], tol)
    for x in range(stack.shape[1]):
        if px[x] > 0:
            block = np.einsum("f,fa,fb->ab", w, stack[:, x, :], stack[:, x, :].conj())
            total += px[x] * von_neumann_entropy(block / px[x], tol)
    flat = stack.reshape(len(w), -1)
    rho = np.einsum("f,fa,fb->ab", w, flat, flat.conj())
    return total - von_neumann_entropy(rho, tol)


class CurveRow(NamedTuple):
    t: float
    p0: float
    h: float


def fig2_curve(samples: int) -> list[CurveRow]:
    """p0(t) and h(p0(t)) on a uniform grid of t in [0, 1]."""
    if samples < 2:
        raise ValueError("need at least two samples")
    rows = []
    for t in np.linspace(0.0, 1.0, samples):
        p0 = p0_of_t(float(t))
        rows.append(CurveRow(float(t), p0, binary_entropy(p0)))
    return rows


# ------------------------------------------------------------------ E_F(rho)


@dataclass
class EfBudget:
    starts: int = 6
    iterations: int = 400
    step: float = 0.5
    stall_tol: float = 1e-12
    seed: int = 0


@dataclass
class EfMixedReport:
    value: float
    weights: np.ndarray
    states: list[np.ndarray]
    spread: list[float]
    iterations: int
    converged: bool
    best_start: int
    ensemble_size: int
    rank: int
    spectral_value: float = field(default=np.nan)


def _bipartite(rho, dims, left) -> tuple[np.ndarray, tuple[int, int]]:
    if isinstance(rho, LabeledState):
        if left is not None:
            left = as_collection(left)
            order = [n for n in rho.ids if n in left] + [n for n in rho.ids if n not in left]
            if not left or len(left) == len(rho.ids):
                raise NotBipartite("left collection must be a proper non-empty subset")
            perm = [rho.ids.index(n) for n in order]
            k = len(rho.ids)
            t = rho.density_matrix().reshape(rho.dims + rho.dims).transpose(perm + [k + p for p in perm])
            nx = int(np.prod([rho.dims[p] for p in perm[: len(left)]]))
            ny = rho.dim // nx
            return t.reshape(rho.dim, rho.dim), (nx, ny)
        if len(rho.labels) != 2:
            raise NotBipartite(f"state has {len(rho.labels)} factors; pass left= to choose a cut")
        return rho.density_matrix(), (rho.dims[0], rho.dims[1])
    rho = np.asarray(rho, dtype=complex)
    if dims is None or len(dims) != 2 or dims[0] * dims[1] != rho.shape[0]:
        raise NotBipartite("matrix input needs dims=(N_x, N_y) matching its size")
    return rho, (int(dims[0]), int(dims[1]))


def _ensemble_value(mats: np.ndarray) -> tuple[float, np.ndarray]:
    """sum_a w_a E_F(M_a / sqrt(w_a)) and its gradient w.r.t. conj(M_a).

    ``mats`` has shape (K, N_x, N_y) and holds unnormalized members
    M_a = sqrt(w_a) psi_a.
    """
    sigma = mats @ mats.conj().transpose(0, 2, 1)
    vals, vecs = np.linalg.eigh(sigma)
    vals = np.clip(vals, 0.0, None)
    weights = vals.sum(axis=1)
    pos = vals > 1e-300
    logv = np.where(pos, np.log(np.where(pos, vals, 1.0)), 0.0)
    logw = np.log(np.where(weights > 1e-300, weights, 1.0))
    value = float(-(vals * logv).sum() + (weights * logw).sum()) / LN2
    coef = np.where(pos, logv - logw[:, None], 0.0)
    proj = np.einsum("aik,ak,ajk->aij", vecs, coef, vecs.conj())
    grad = -(proj @ mats) / LN2
    return value, grad


def ef_mixed(
    rho,
    ensemble_size: int | None = None,
    budget: EfBudget | None = None,
    dims: tuple[int, int] | None = None,
    left=None,
    tol: float = DEFAULT_TOL,
) -> EfMixedReport:
    """Upper estimate of E_F(rho) by minimizing over rho-ensembles.

    Ensembles are |psi~_a> = sum_b T_ab sqrt(lambda_b) |v_b> for the spectral
    pairs (lambda_b, v_b) of rho and an isometry T made of the first ``rank``
    columns of a K x K unitary. The unitary is moved by Riemannian gradient
    descent, Q <- Q exp(-step * G) with G the skew-Hermitian gradient, from
    several Haar-random starts plus the spectral ensemble itself.
    """
    budget = budget or EfBudget()
    mat, (nx, ny) = _bipartite(rho, dims, left)
    vals, vecs = hermitian_eigh(mat, tol)
    tr = vals.sum()
    if abs(tr - 1.0) > tol or vals.min() < -1e-10:
        raise NotNormalized("input is not a unit-trace positive matrix")
    keep = vals > 1e-12
    rank = int(keep.sum())
    size = rank * rank if ensemble_size is None else int(ensemble_size)
    if size < rank:
        raise RankExceedsEnsemble(f"ensemble size {size} is below rank {rank}")
    comps = (np.sqrt(vals[keep])[:, None] * vecs[:, keep].T).reshape(rank, nx, ny)

    def members(q):
        return np.einsum("ab,bxy->axy", q[:, :rank], comps)

    def objective(q):
        value, grad_m = _ensemble_value(members(q))
        grad_t = np.einsum("bxy,axy->ab", comps.conj(), grad_m)
        z = np.zeros((size, size), dtype=complex)
        z[:, :rank] = grad_t
        a = q.conj().T @ z
        return value, 0.5 * (a - a.conj().T)

    spectral = _ensemble_value(members(np.eye(size, dtype=complex)))[0]
    results = []
    total_iters = 0
    converged_all = True
    for start in range(budget.starts):
        rng = np.random.default_rng([budget.seed, start])
        q = np.eye(size, dtype=complex) if start == 0 else random_unitary(rng, size)
        f, g = objective(q)
        step = budget.step
        converged = False
        for it in range(budget.iterations):
            total_iters += 1
            gnorm2 = float(np.sum(np.abs(g) ** 2))
            if gnorm2 < 1e-24:
                converged = True
                break
            while step > 1e-12:
                q_new = q @ expm_skew(-step * g, tol=np.inf)
                f_new, g_new = objective(q_new)
                if f_new <= f - 1e-4 * step * gnorm2:
                    break
                step *= 0.5
            else:
                converged = True
                break
            gain = f - f_new
            q, f, g = q_new, f_new, g_new
            step = min(step * 2.0, 4.0)
            if gain < budget.stall_tol:
                converged = True
                break
        converged_all &= converged
        results.append((f, start, q))
    best_f, best_start, best_q = min(results, key=lambda r: (r[0], r[1]))
    mats = members(best_q)
    weights = np.einsum("axy,axy->a", mats, mats.conj()).real
    states = [m / np.sqrt(w) if w > 0 else m for m, w in zip(mats, weights)]
    return EfMixedReport(
        value=max(best_f, 0.0),
        weights=weights,
        states=states,
        spread=[r[0] for r in results],
        iterations=total_iters,
        converged=converged_all,
        best_start=best_start,
        ensemble_size=size,
        rank=rank,
        spectral_value=spectral,
    )
