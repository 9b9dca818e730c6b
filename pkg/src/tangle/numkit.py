"""Dense complex linear algebra and scalar entropy primitives.

Matrices are plain ``numpy`` arrays of dtype ``complex128`` (or ``float64``);
nothing here mutates its inputs. All entropies are in bits.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    NotDensityMatrix,
    NotHermitian,
    NotNormalized,
    NotSkew,
    NotSquare,
    OutOfRange,
)

DEFAULT_TOL = 1e-8
# Eigenvalues in [-EIG_CLAMP, 0] are treated as roundoff from partial traces.
EIG_CLAMP = 1e-10

_JACOBI_MAX_SWEEPS = 60


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {a.shape}")
    if not np.iscomplexobj(a):
        a = a.astype(float)
    return a


def is_hermitian(m, tol: float = DEFAULT_TOL) -> bool:
    m = as_matrix(m)
    return m.shape[0] == m.shape[1] and bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


def is_isometry(m, tol: float = DEFAULT_TOL) -> bool:
    """True if the columns of ``m`` are orthonormal."""
    m = as_matrix(m)
    gram = m.conj().T @ m
    return bool(np.max(np.abs(gram - np.eye(m.shape[1])), initial=0.0) <= tol)


def is_unitary(m, tol: float = DEFAULT_TOL) -> bool:
    m = as_matrix(m)
    return m.shape[0] == m.shape[1] and is_isometry(m, tol)


def is_skew(m, tol: float = DEFAULT_TOL) -> bool:
    m = as_matrix(m)
    return m.shape[0] == m.shape[1] and bool(np.max(np.abs(m + m.conj().T), initial=0.0) <= tol)


def _jacobi_rotation(app: float, aqq: float, apq: complex) -> np.ndarray:
    """2x2 unitary Q with Q^dag [[app, apq], [apq*, aqq]] Q diagonal."""
    g = abs(apq)
    if g == 0.0:
        return np.eye(2, dtype=complex)
    phase = apq / g
    tau = (aqq - app) / (2.0 * g)
    if abs(tau) > 1e150:
        t = 0.5 / tau
    else:
        t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c
    return np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])


def hermitian_eigh(m, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigendecomposition of a Hermitian matrix.

    Returns ``(values, vectors)`` with values in descending order and
    ``m == vectors @ diag(values) @ vectors^dag``.
    """
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise NotSquare(f"matrix of shape {m.shape} is not square")
    resid = float(np.max(np.abs(m - m.conj().T), initial=0.0))
    if resid > tol:
        raise NotHermitian(f"symmetry residual {resid:.3g} exceeds tol {tol:.3g}")
    n = m.shape[0]
    a = 0.5 * (m + m.conj().T).astype(complex)
    v = np.eye(n, dtype=complex)
    scale = np.linalg.norm(a)
    for _ in range(_JACOBI_MAX_SWEEPS):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= 1e-15 * max(scale, 1e-300):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) <= 1e-300:
                    continue
                rot = _jacobi_rotation(a[p, p].real, a[q, q].real, a[p, q])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ rot
                a[idx, :] = rot.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ rot
    values = np.diag(a).real.copy()
    order = np.argsort(-values, kind="stable")
    return values[order], v[:, order]


def hermitian_eigvals(m, tol: float = DEFAULT_TOL, method: str = "jacobi") -> np.ndarray:
    """Real eigenvalues of a Hermitian matrix, descending.

    ``method="lapack"`` delegates to ``numpy.linalg.eigvalsh``; it is used on
    hot paths (entropies of many small reductions) and cross-checked against
    the Jacobi route in the test suite.
    """
    if method == "jacobi":
        return hermitian_eigh(m, tol)[0]
    if method != "lapack":
        raise ValueError(f"unknown eigensolver {method!r}")
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise NotSquare(f"matrix of shape {m.shape} is not square")
    resid = float(np.max(np.abs(m - m.conj().T), initial=0.0))
    if resid > tol:
        raise NotHermitian(f"symmetry residual {resid:.3g} exceeds tol {tol:.3g}")
    return np.linalg.eigvalsh(0.5 * (m + m.conj().T))[::-1]


def _complete_orthonormal(cols: np.ndarray, dim: int) -> np.ndarray:
    """Extend orthonormal columns to a full unitary by Gram-Schmidt on e_0, e_1, ..."""
    basis = [c for c in cols.T]
    for k in range(dim):
        if len(basis) == dim:
            break
        cand = np.zeros(dim, dtype=complex)
        cand[k] = 1.0
        for _ in range(2):
            for b in basis:
                cand = cand - b * np.vdot(b, cand)
        nrm = np.linalg.norm(cand)
        if nrm > 1e-8:
            basis.append(cand / nrm)
    return np.array(basis).T


def svd(m) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Singular value decomposition by one-sided (Hestenes) Jacobi.

    Returns ``(U, s, V)`` with U, V unitary and ``U @ m @ V^dag`` equal to the
    rectangular diagonal matrix carrying ``s`` (descending, length
    ``min(rows, cols)``).
    """
    m = as_matrix(m).astype(complex)
    rows, cols = m.shape
    a = m.copy()
    v = np.eye(cols, dtype=complex)
    for _ in range(_JACOBI_MAX_SWEEPS):
        rotated = False
        for i in range(cols - 1):
            for j in range(i + 1, cols):
                alpha = np.vdot(a[:, i], a[:, i]).real
                beta = np.vdot(a[:, j], a[:, j]).real
                gamma = np.vdot(a[:, i], a[:, j])
                if abs(gamma) <= 1e-15 * np.sqrt(alpha * beta) or abs(gamma) <= 1e-300:
                    continue
                rotated = True
                rot = _jacobi_rotation(alpha, beta, gamma)
                idx = [i, j]
                a[:, idx] = a[:, idx] @ rot
                v[:, idx] = v[:, idx] @ rot
        if not rotated:
            break
    norms = np.linalg.norm(a, axis=0)
    order = np.argsort(-norms, kind="stable")
    norms, a, v = norms[order], a[:, order], v[:, order]
    k = min(rows, cols)
    s = norms[:k].copy()
    cutoff = 1e-14 * max(s[0] if k else 0.0, 1e-300)
    keep = [i for i in range(k) if s[i] > cutoff]
    w = a[:, keep] / s[keep]
    # re-orthonormalize against roundoff before completing the basis
    w, _ = _gram_schmidt(w)
    w_full = _complete_orthonormal(w, rows)
    return w_full.conj().T, s, v.conj().T


def _gram_schmidt(cols: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    q = np.zeros_like(cols)
    r = np.zeros((cols.shape[1], cols.shape[1]), dtype=complex)
    for j in range(cols.shape[1]):
        vec = cols[:, j].copy()
        for _ in range(2):
            for i in range(j):
                proj = np.vdot(q[:, i], vec)
                r[i, j] += proj
                vec = vec - proj * q[:, i]
        r[j, j] = np.linalg.norm(vec)
        q[:, j] = vec / r[j, j]
    return q, r


def shannon_entropy(p, tol: float = DEFAULT_TOL) -> float:
    """Shannon entropy in bits, with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float).ravel()
    total = p.sum()
    if abs(total - 1.0) > tol:
        raise NotNormalized(f"probabilities sum to {total!r}, not 1")
    if p.size and p.min() < -tol:
        raise NotNormalized(f"negative probability {p.min()!r}")
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise OutOfRange(f"binary entropy argument {p!r} outside [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1.0 - p) * np.log2(1.0 - p))


def clamp_spectrum(values: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Zero eigenvalues within roundoff of 0; raise on genuinely negative ones."""
    values = np.asarray(values, dtype=float)
    if values.size and values.min() < -EIG_CLAMP:
        raise NotDensityMatrix(f"not positive semidefinite: eigenvalue {values.min():.3g}")
    return np.where(values < 0, 0.0, values)


def von_neumann_entropy(rho, tol: float = DEFAULT_TOL, method: str = "lapack") -> float:
    rho = as_matrix(rho)
    if rho.shape[0] != rho.shape[1]:
        raise NotDensityMatrix(f"not square: shape {rho.shape}")
    if not is_hermitian(rho, tol):
        raise NotDensityMatrix("not Hermitian within tol")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise NotDensityMatrix(f"trace is {tr!r}, not 1")
    values = clamp_spectrum(hermitian_eigvals(rho, tol, method=method), tol)
    return shannon_entropy(values / values.sum(), tol)


def expm_skew(g, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Exponential of a skew-Hermitian (or real skew-symmetric) matrix.

    Scaling and squaring of the truncated Taylor series; the result is unitary
    (orthogonal for real input) to roundoff.
    """
    g = as_matrix(g)
    if not is_skew(g, tol):
        raise NotSkew("generator is not skew-Hermitian within tol")
    n = g.shape[0]
    norm = np.linalg.norm(g, 1) if n else 0.0
    squarings = max(0, int(np.ceil(np.log2(norm / 0.25)))) if norm > 0.25 else 0
    x = g / (2.0**squarings)
    result = np.eye(n, dtype=g.dtype)
    term = np.eye(n, dtype=g.dtype)
    for k in range(1, 20):
        term = term @ x / k
        result = result + term
        if np.max(np.abs(term), initial=0.0) < 1e-18:
            break
    for _ in range(squarings):
        result = result @ result
    return result


def skew_from_params(theta, n: int, real: bool = False) -> np.ndarray:
    """Skew generator from its free real parameters.

    Complex case: n^2 parameters (n imaginary diagonal entries, then real and
    imaginary parts of the strict upper triangle). Real case: n(n-1)/2
    upper-triangle entries.
    """
    theta = np.asarray(theta, dtype=float)
    iu = np.triu_indices(n, 1)
    m = len(iu[0])
    if real:
        if theta.size != m:
            raise ValueError(f"expected {m} parameters, got {theta.size}")
        g = np.zeros((n, n))
        g[iu] = theta
        return g - g.T
    if theta.size != n * n:
        raise ValueError(f"expected {n * n} parameters, got {theta.size}")
    g = np.zeros((n, n), dtype=complex)
    g[np.diag_indices(n)] = 1j * theta[:n]
    g[iu] = theta[n : n + m] + 1j * theta[n + m :]
    g[(iu[1], iu[0])] = -np.conj(g[iu])
    return g


def skew_param_count(n: int, real: bool = False) -> int:
    return n * (n - 1) // 2 if real else n * n
