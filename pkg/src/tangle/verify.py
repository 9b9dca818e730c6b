"""Optimization over a priori unitaries and Monte Carlo checks of the inequalities.

Every ``check_*`` function returns an :class:`McReport`. Trials are
independent; trial ``k`` draws all of its randomness from
``trial_rng(seed, k)`` so a report depends only on (seed, trials, dims) and
never on the number of worker processes.
"""

from __future__ import annotations

import functools
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm, logm
from scipy.optimize import minimize
from scipy.special import xlogy

from . import bayesnet as bn
from .errors import NotNormalized
from .identities import evaluate, mu
from .measures import ef_pure, two_qubit_t
from .numkit import DEFAULT_TOL, expm_skew, skew_from_params, skew_param_count, svd, von_neumann_entropy
from .sampling import (
    random_amplitude_table,
    random_amplitudes,
    random_density,
    random_simplex,
    random_stochastic_table,
    random_unitary,
    trial_rng,
)
from .states import (
    EntropyCache,
    LabeledState,
    ListenerPartition,
    cmi,
    conditionally_separable_state,
    e_sum,
    partial_trace,
    tanglement,
    tanglement_from_entropies,
)

INEQ_TOL = 1e-9
FD_STEP = 1e-5
GRAD_TOL = 1e-5
LN2 = np.log(2.0)


# ------------------------------------------------------------------ reports


@dataclass
class McReport:
    name: str
    trials: int
    violations: int
    worst_residual: float
    seed: int
    runtime_ms: float = 0.0
    dims: tuple[int, int] | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.violations <= self.trials:
            raise ValueError("violations must lie in [0, trials]")

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dims"] = list(self.dims) if self.dims is not None else None
        d["extras"] = {k: self.extras[k] for k in sorted(self.extras)}
        return d

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kwargs)


@dataclass
class TrialResult:
    """Outcome of one trial: a signed residual (positive = violated) plus named side values."""

    residual: float
    violated: bool
    extras: dict = field(default_factory=dict)


def _merge(results: Sequence[TrialResult]) -> tuple[int, float, dict]:
    violations = sum(1 for r in results if r.violated)
    worst = max((r.residual for r in results), default=0.0)
    extras: dict = {}
    for r in results:
        for k, v in r.extras.items():
            if isinstance(v, bool):
                extras[k] = extras.get(k, 0) + int(v)
            else:
                extras[k] = max(extras.get(k, -np.inf), float(v))
    return violations, float(worst), extras


def _run_chunk(fn: Callable[[np.random.Generator, int], TrialResult], seed: int, indices: range) -> list[TrialResult]:
    return [fn(trial_rng(seed, k), k) for k in indices]


def default_workers() -> int:
    return os.cpu_count() or 1


def run_trials(
    name: str,
    fn: Callable[[np.random.Generator, int], TrialResult],
    trials: int,
    seed: int,
    workers: int = 1,
    dims: tuple[int, int] | None = None,
) -> McReport:
    """Run ``fn`` on trials 0..trials-1 and merge results in trial order.

    With ``workers > 1`` contiguous chunks go to a process pool; ``fn`` must
    then be picklable (a module-level function or a partial of one).
    """
    start = time.perf_counter()
    if workers <= 1 or trials < 2:
        results = _run_chunk(fn, seed, range(trials))
    else:
        bounds = np.linspace(0, trials, min(workers, trials) * 4 + 1).astype(int)
        chunks = [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_run_chunk, [fn] * len(chunks), [seed] * len(chunks), chunks)
            results = [r for part in parts for r in part]
    violations, worst, extras = _merge(results)
    runtime = (time.perf_counter() - start) * 1000.0
    return McReport(name, trials, violations, worst, seed, runtime, dims, extras)


# ----------------------------------------------------- ST of the two-listener net


def mutual_information_bits(p) -> float:
    """H(x:y) in bits of a joint table P[x, y] (zeros allowed)."""
    p = np.asarray(p, dtype=float)
    px, py = p.sum(axis=1), p.sum(axis=0)
    h = lambda q: -float(np.sum(xlogy(q, q))) / LN2  # noqa: E731
    return h(px) + h(py) - h(p.ravel())


def st_fig3(psi0, U, V) -> float:
    """S(x:y|e) of the copy net for psi = U psi0 V^dagger, via its closed form H(x:y) of |psi|^2."""
    psi = U @ psi0 @ V.conj().T
    return mutual_information_bits(np.abs(psi) ** 2)


def st_fig3_pipeline(psi0, U, V) -> float:
    """Same quantity computed from the meta state of the net."""
    s = bn.meta_state(bn.build_fig3(psi0, U, V))
    return tanglement(s, [["x"], ["y"]], speaker=["e"])


@dataclass
class StBudget:
    starts: int = 3
    iterations: int = 100
    rounds: int = 3
    fd_step: float = FD_STEP
    stall_tol: float = 1e-8
    seed: int = 0


@dataclass
class OptReport:
    best_value: float
    alpha: np.ndarray
    beta: np.ndarray
    iterations: int
    spread: list[float]
    converged: bool
    warm_value: float
    descent_best: float
    sampled_max: float
    descent_reached: bool = True

    def __post_init__(self):
        if self.best_value < self.sampled_max - 1e-12:
            raise ValueError("best_value must dominate every sampled value")

    def to_dict(self) -> dict:
        pairs = lambda m: [[[float(z.real), float(z.imag)] for z in row] for row in m]  # noqa: E731
        return {
            "best_value": self.best_value,
            "alpha": pairs(self.alpha),
            "beta": pairs(self.beta),
            "iterations": self.iterations,
            "spread": list(self.spread),
            "converged": self.converged,
            "warm_value": self.warm_value,
            "descent_best": self.descent_best,
            "sampled_max": self.sampled_max,
            "descent_reached": self.descent_reached,
        }


class _Tracked:
    """Objective wrapper that remembers the largest value ever evaluated."""

    def __init__(self, fn):
        self.fn = fn
        self.max = -np.inf
        self.calls = 0

    def __call__(self, *args) -> float:
        v = self.fn(*args)
        self.calls += 1
        if v > self.max:
            self.max = v
        return v


def _skew_basis(n: int) -> np.ndarray:
    k = skew_param_count(n)
    return np.stack([skew_from_params(np.eye(k)[i], n) for i in range(k)])


def _ascend(obj, U, V, budget: StBudget) -> tuple[float, np.ndarray, np.ndarray, int, bool]:
    """Local ascent on the unitary pair with central-difference gradients.

    Parameters are skew-Hermitian generators in the exponential chart
    centered at the current (U, V). Each round runs BFGS in that chart and
    recenters; rounds stop once the gain drops below ``stall_tol``.
    """
    bx, by = _skew_basis(U.shape[0]), _skew_basis(V.shape[0])
    kx = len(bx)
    k = kx + len(by)
    h = budget.fd_step
    f = obj(U, V)
    total = 0
    converged = False
    for _ in range(budget.rounds):
        U0, V0 = U, V

        def left(tx, U0=U0):
            return U0 @ expm(np.tensordot(tx, bx, axes=1))

        def right(ty, V0=V0):
            return V0 @ expm(np.tensordot(ty, by, axes=1))

        def loss(theta):
            return -obj(left(theta[:kx]), right(theta[kx:]))

        def grad(theta):
            tx, ty = theta[:kx], theta[kx:]
            Ut, Vt = left(tx), right(ty)
            g = np.empty(k)
            for i in range(k):
                e = np.zeros(k)
                e[i] = h
                if i < kx:
                    up, dn = obj(left(tx + e[:kx]), Vt), obj(left(tx - e[:kx]), Vt)
                else:
                    up, dn = obj(Ut, right(ty + e[kx:])), obj(Ut, right(ty - e[kx:]))
                g[i] = -(up - dn) / (2 * h)
            return g

        res = minimize(loss, np.zeros(k), jac=grad, method="BFGS",
                       options={"maxiter": budget.iterations, "gtol": 1e-7})
        total += int(res.nit)
        f_new = -float(res.fun)
        if f_new <= f:
            converged = True
            break
        gain = f_new - f
        U, V = left(res.x[:kx]), right(res.x[kx:])
        f = f_new
        if gain < budget.stall_tol:
            converged = True
            break
    return f, U, V, total, converged


def _schmidt_pair(psi0) -> tuple[np.ndarray, np.ndarray]:
    """(U, V) with U psi0 V^dagger diagonal."""
    u, _, v = svd(psi0)
    return u, v


def max_st(psi0, budget: StBudget | None = None, tol: float = DEFAULT_TOL) -> OptReport:
    """Maximize S(x:y|e) of the copy net over a priori local unitaries U, V.

    Multi-start ascent (identity plus Haar-random starts) is run alongside the
    Schmidt-diagonalizing warm start, which is polished by the same ascent.
    ``descent_best`` is what the non-warm starts achieved on their own.
    """
    budget = budget or StBudget()
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.ndim != 2:
        raise ValueError("psi0 must be an amplitude matrix")
    norm2 = float(np.sum(np.abs(psi0) ** 2))
    if abs(norm2 - 1.0) > tol:
        raise NotNormalized(f"squared Frobenius norm is {norm2!r}, not 1")
    nx, ny = psi0.shape
    obj = _Tracked(lambda U, V: st_fig3(psi0, U, V))
    rng = np.random.default_rng([budget.seed, nx, ny])

    runs = []
    total_iters = 0
    all_converged = True
    for s in range(budget.starts):
        if s == 0:
            U, V = np.eye(nx, dtype=complex), np.eye(ny, dtype=complex)
        else:
            U, V = random_unitary(rng, nx), random_unitary(rng, ny)
        f, U, V, it, conv = _ascend(obj, U, V, budget)
        runs.append((f, U, V))
        total_iters += it
        all_converged &= conv
    descent_best = max((r[0] for r in runs), default=-np.inf)

    Uw, Vw = _schmidt_pair(psi0)
    warm_value = obj(Uw, Vw)
    f, U, V, it, conv = _ascend(obj, Uw, Vw, budget)
    runs.append((f, U, V))
    total_iters += it
    all_converged &= conv

    values = [r[0] for r in runs]
    best = int(np.argmax(values))
    f_best, U_best, V_best = runs[best]
    target = ef_pure(psi0, tol)
    return OptReport(
        best_value=max(f_best, obj.max),
        alpha=logm(U_best),
        beta=logm(V_best),
        iterations=total_iters,
        spread=[float(v) for v in values],
        converged=all_converged,
        warm_value=float(warm_value),
        descent_best=float(descent_best),
        sampled_max=float(obj.max),
        descent_reached=bool(descent_best >= target - 1e-6),
    )


def _max_st_trial(dims, budget, rng, trial) -> TrialResult:
    psi0 = random_amplitudes(rng, dims)
    rep = max_st(psi0, StBudget(**{**asdict(budget), "seed": trial}))
    target = ef_pure(psi0)
    shortfall = target - rep.best_value
    overshoot = rep.sampled_max - target
    D = np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, dims[0])))
    U, V = random_unitary(rng, dims[0]), random_unitary(rng, dims[1])
    gauge = abs(st_fig3(psi0, D @ U, V) - st_fig3(psi0, U, V))
    return TrialResult(
        residual=max(shortfall - 1e-6, overshoot - INEQ_TOL, gauge - INEQ_TOL),
        violated=bool(shortfall > 1e-6 or overshoot > INEQ_TOL or gauge > INEQ_TOL),
        extras={
            "max_shortfall": shortfall,
            "max_overshoot": overshoot,
            "max_gauge_residual": gauge,
            "descent_short_runs": not rep.descent_reached,
        },
    )


def check_max_st(trials: int, dims=(2, 2), seed: int = 0, workers: int = 1, budget: StBudget | None = None) -> McReport:
    """max_st reaches ef_pure, never exceeds it, and is blind to phase gauges."""
    dims = tuple(dims)
    fn = functools.partial(_max_st_trial, dims, budget or StBudget())
    return run_trials("max-st", fn, trials, seed, workers, dims)


# ------------------------------------------------------ a posteriori unitaries


def check_posteriori_invariance(psi, U, V, tanglement_fn=tanglement) -> tuple[float, float]:
    """Residuals (|S_rho(a:b|e) - S_mu0(x:y|e)|, |S_sigma(a:b|e)|).

    rho e-sums the copy nodes x, y of the net with a posteriori channels U, V;
    sigma traces them out instead.
    """
    psi = np.asarray(psi, dtype=complex)
    net = bn.build_fig7(psi, U, V, kind=bn.QUANTUM)
    meta = bn.meta_state(net)
    rho = e_sum(meta, ["x", "y"])
    sigma = partial_trace(meta, ["x", "y"])
    base = tanglement_fn(bn.meta_state(bn.build_fig3(psi)), [["x"], ["y"]], speaker=["e"])
    r1 = abs(tanglement_fn(rho, [["a"], ["b"]], speaker=["e"]) - base)
    r2 = abs(tanglement_fn(sigma, [["a"], ["b"]], speaker=["e"]))
    return r1, r2


def _posteriori_trial(dims, tanglement_fn, rng, trial) -> TrialResult:
    psi = random_amplitudes(rng, dims)
    U, V = random_unitary(rng, dims[0]), random_unitary(rng, dims[1])
    r1, r2 = check_posteriori_invariance(psi, U, V, tanglement_fn)
    worst = max(r1, r2)
    return TrialResult(worst - INEQ_TOL, worst > INEQ_TOL, {"max_esum_residual": r1, "max_trace_residual": r2})


def check_posteriori(trials: int, dims=(2, 2), seed: int = 0, workers: int = 1, tanglement_fn=tanglement) -> McReport:
    dims = tuple(dims)
    fn = functools.partial(_posteriori_trial, dims, tanglement_fn)
    return run_trials("posteriori", fn, trials, seed, workers, dims)


# ------------------------------------------------ conditional data processing


def _ht(h: EntropyCache, listeners: Sequence[str], speaker: str, tanglement_fn) -> float:
    if tanglement_fn is None:
        return tanglement_from_entropies(h, ListenerPartition.of([[l] for l in listeners], [speaker]))
    return tanglement_fn(h.state, [[l] for l in listeners], speaker=[speaker])


def _cond_dp_trial(n, kind, tanglement_fn, rng, trial) -> TrialResult:
    net = bn.random_fig9(rng, n, kind)
    xs = ["x", "y"] if n == 2 else [f"x{k}" for k in range(1, n + 1)]
    as_ = ["a", "b"] if n == 2 else [f"a{k}" for k in range(1, n + 1)]
    quantum = kind == bn.QUANTUM
    s = bn.meta_state(net) if quantum else bn.classical_state(net)
    h = EntropyCache(s)
    lhs = _ht(h, as_, "e", tanglement_fn)
    rhs = _ht(h, xs, "e", tanglement_fn)
    residual = lhs - rhs
    violated = residual > INEQ_TOL
    extras: dict = {}
    if quantum:
        # coherent form: e-sum the copy nodes, compare with the net without channels
        rho = e_sum(s, xs)
        hr = EntropyCache(rho)
        sub = bn.meta_state(bn.BayesNet(bn.QUANTUM, tuple(net.node(i) for i in ["e", *xs])))
        hs = EntropyCache(sub)
        coherent = _ht(hr, as_, "e", tanglement_fn) - _ht(hs, xs, "e", tanglement_fn)
        extras["esum_worst_residual"] = coherent
        extras["esum_violations"] = bool(coherent > INEQ_TOL)
        if n == 2:
            c = lambda *ids: h(frozenset(ids))  # noqa: E731
            extras["markov_a_given_ey"] = abs((c("a", "e", "y", "b") - c("e", "y", "b")) - (c("a", "e", "y") - c("e", "y")))
            extras["markov_y_given_ex"] = abs((c("y", "e", "x", "a") - c("e", "x", "a")) - (c("y", "e", "x") - c("e", "x")))
    return TrialResult(residual, violated, extras)


def check_cond_dp(
    trials: int,
    n: int = 2,
    kind: str = bn.QUANTUM,
    seed: int = 0,
    workers: int = 1,
    tanglement_fn=None,
) -> McReport:
    """HT(a_1..a_n|e) <= HT(x_1..x_n|e) on random copy-and-channel nets.

    The counted inequality is evaluated on the joint distribution (classical)
    or on the full meta density matrix (quantum). For quantum nets the extras
    also carry the coherent form, where the copy nodes are e-summed away, and
    for n = 2 the residuals of the two conditional-independence relations
    used to derive the inequality.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    fn = functools.partial(_cond_dp_trial, n, kind, tanglement_fn)
    rep = run_trials(f"cond-dp-{kind}-n{n}", fn, trials, seed, workers)
    return rep


# ------------------------------------------------------ dephasing bound


def phase_gradient(psi, h: float = FD_STEP) -> np.ndarray:
    """Central-difference gradient of S(psi psi^dagger) over the phases of psi[x, y]."""
    psi = np.asarray(psi, dtype=complex)
    grad = np.empty(psi.shape)

    def s_of(m):
        rho = m @ m.conj().T
        return von_neumann_entropy(rho / np.trace(rho).real)

    for idx in np.ndindex(*psi.shape):
        plus, minus = psi.copy(), psi.copy()
        plus[idx] *= np.exp(1j * h)
        minus[idx] *= np.exp(-1j * h)
        grad[idx] = (s_of(plus) - s_of(minus)) / (2 * h)
    return grad


def _appendix_a_trial(dims, ef_fn, rng, trial) -> TrialResult:
    psi = random_amplitudes(rng, dims)
    mag = np.abs(psi)
    r = ef_fn(mag) - ef_fn(psi)
    violated = r > INEQ_TOL
    extras = {"max_phase_gradient": float(np.max(np.abs(phase_gradient(mag))))}
    if extras["max_phase_gradient"] > GRAD_TOL:
        violated = True
    if dims == (2, 2):
        dt = two_qubit_t(mag).t - two_qubit_t(psi).t
        extras["max_t_gap"] = dt
        if dt > INEQ_TOL:
            violated = True
    return TrialResult(r, bool(violated), extras)


def check_appendix_a(trials: int, dims=(2, 2), seed: int = 0, workers: int = 1, ef_fn=ef_pure) -> McReport:
    """E_F(|psi|) <= E_F(psi); the phase gradient vanishes at |psi|.

    For 2x2 states the route through t is checked as well: t(|psi|) <= t(psi),
    with ``max_t_gap`` the largest t(|psi|) - t(psi).
    """
    dims = tuple(dims)
    if dims[0] > dims[1]:
        raise ValueError("dims must satisfy N_x <= N_y")
    fn = functools.partial(_appendix_a_trial, dims, ef_fn)
    return run_trials("appendix-a", fn, trials, seed, workers, dims)


# --------------------------------------------- mutual information bound


def eta(psi_bar, alpha, beta) -> float:
    """H(x:y) of P = |e^alpha Psi_bar (e^beta)^T|^2 for real skew alpha, beta."""
    m = expm_skew(alpha) @ psi_bar @ expm_skew(beta).T
    return mutual_information_bits(m**2)


def _eta_params(psi_bar, theta) -> float:
    nx, ny = psi_bar.shape
    kx = skew_param_count(nx, real=True)
    return eta(psi_bar, skew_from_params(theta[:kx], nx, real=True), skew_from_params(theta[kx:], ny, real=True))


def eta_gradient(psi_bar, h: float = FD_STEP) -> np.ndarray:
    nx, ny = psi_bar.shape
    k = skew_param_count(nx, real=True) + skew_param_count(ny, real=True)
    grad = np.empty(k)
    for i in range(k):
        e = np.zeros(k)
        e[i] = h
        grad[i] = (_eta_params(psi_bar, e) - _eta_params(psi_bar, -e)) / (2 * h)
    return grad


def schmidt_diagonal(P) -> np.ndarray:
    """Psi_bar = diag of the singular values of sqrt(P), as a real N_x x N_y matrix."""
    root = np.sqrt(np.asarray(P, dtype=float))
    _, s, _ = svd(root)
    out = np.zeros(root.shape)
    out[np.arange(len(s)), np.arange(len(s))] = s
    return out


def _appendix_b_trial(dims, mi_fn, probes, rng, trial) -> TrialResult:
    P = random_simplex(rng, dims[0] * dims[1]).reshape(dims)
    bound = mi_fn(P) - ef_pure(np.sqrt(P))
    psi_bar = schmidt_diagonal(P)
    grad = float(np.max(np.abs(eta_gradient(psi_bar)), initial=0.0))
    base = mutual_information_bits(psi_bar**2)
    k = skew_param_count(dims[0], real=True) + skew_param_count(dims[1], real=True)
    gain = -np.inf
    for _ in range(probes):
        d = rng.standard_normal(k)
        gain = max(gain, _eta_params(psi_bar, 1e-3 * d / np.linalg.norm(d)) - base)
    violated = bound > INEQ_TOL or grad > GRAD_TOL or gain > INEQ_TOL
    return TrialResult(bound, bool(violated), {"max_eta_gradient": grad, "max_probe_gain": gain})


def check_appendix_b(trials: int, dims=(2, 2), seed: int = 0, workers: int = 1, probes: int = 4, mi_fn=mutual_information_bits) -> McReport:
    """H(x:y) <= E_F(sqrt P); eta is stationary and locally maximal at the Schmidt point."""
    dims = tuple(dims)
    fn = functools.partial(_appendix_b_trial, dims, mi_fn, probes)
    return run_trials("appendix-b", fn, trials, seed, workers, dims)


# ------------------------------------------------- conditionally separable


def random_cond_separable(rng: np.random.Generator, n: int, n_e: int = 2, d: int = 2) -> LabeledState:
    w = random_simplex(rng, n_e)
    blocks = [[random_density(rng, d, int(rng.integers(1, d + 1))) for _ in range(n)] for _ in range(n_e)]
    return conditionally_separable_state(w, blocks)


def fig4_listener_state(net: bn.BayesNet) -> LabeledState:
    """e-sum the compound sources, trace the r nodes; leaves (a, q_1..q_n)."""
    meta = bn.meta_state(net)
    js = [i for i in net.ids if i == "jbar" or (i.startswith("j") and i[1:].isdigit())]
    rs = [i for i in net.ids if i == "rbar" or (i.startswith("r") and i[1:].isdigit())]
    return partial_trace(e_sum(meta, js), rs)


def random_fig4(rng: np.random.Generator, n: int, na: int = 2, nq: int = 2, nr: int = 2) -> bn.BayesNet:
    w = random_simplex(rng, na)
    alphas = []
    for _ in range(n):
        alphas.append(random_amplitude_table(rng, nq * nr, (na,)).reshape(nq, nr, na))
    return bn.build_fig4(w, alphas)


def _cond_sep_trial(n, tanglement_fn, rng, trial) -> TrialResult:
    s = random_cond_separable(rng, n)
    st = abs(tanglement_fn(s, [[f"X{k}"] for k in range(1, n + 1)], speaker=["E"]))
    q = fig4_listener_state(random_fig4(rng, n))
    st_net = abs(tanglement_fn(q, [[f"q{k}"] for k in range(1, n + 1)], speaker=["a"]))
    p_e = random_simplex(rng, 3)
    channels = [random_stochastic_table(rng, 2, (3,)) for _ in range(n)]
    c = bn.classical_state(bn.build_fig6(p_e, channels))
    ht = abs(tanglement_fn(c, [[f"x{k}"] for k in range(1, n + 1)], speaker=["e"]))
    violated = st > INEQ_TOL or st_net > INEQ_TOL or ht > 1e-12
    return TrialResult(max(st, st_net) - INEQ_TOL, bool(violated), {"max_st_state": st, "max_st_net": st_net, "max_ht_classical": ht})


def check_cond_separable(trials: int, n: int = 2, seed: int = 0, workers: int = 1, tanglement_fn=tanglement) -> McReport:
    """Zero tanglement for conditionally separable states, nets and distributions."""
    fn = functools.partial(_cond_sep_trial, n, tanglement_fn)
    return run_trials(f"cond-sep-n{n}", fn, trials, seed, workers)


def two_group_state(rng: np.random.Generator, n: int, split: int, n_e: int = 2, d: int = 2) -> LabeledState:
    """sum_E w_E |E><E| (x) rho_E(group 1) (x) rho_E(group 2), groups entangled inside."""
    w = random_simplex(rng, n_e)
    blocks = []
    for _ in range(n_e):
        blocks.append([random_density(rng, d**split), random_density(rng, d ** (n - split))])
    s = conditionally_separable_state(w, blocks, listeners=["G1", "G2"])
    # reshape into one factor per listener
    labels = [("E", n_e)] + [(f"X{k}", d) for k in range(1, n + 1)]
    return LabeledState.density(s.density_matrix(), labels)


def _two_group_trial(n, rng, trial) -> TrialResult:
    split = int(rng.integers(1, n))
    s = two_group_state(rng, n, split)
    binding = {k: [f"X{k}"] for k in range(1, n + 1)}
    value = abs(evaluate(mu(*range(1, n + 1)), s, binding, speaker=["E"]))
    t = tanglement(s, [[f"X{k}"] for k in range(1, n + 1)], speaker=["E"])
    return TrialResult(value - INEQ_TOL, value > INEQ_TOL, {"max_abs_mu": value, "max_tau": t})


def check_two_group_separable(trials: int, n: int = 4, seed: int = 0, workers: int = 1) -> McReport:
    """c.m.i. of all listeners vanishes when they split into two conditionally independent groups."""
    fn = functools.partial(_two_group_trial, n)
    return run_trials(f"two-group-n{n}", fn, trials, seed, workers)


# ------------------------------------------------------------ negative c.m.i.


def negative_cmi_distribution() -> LabeledState:
    """P(X1,X2,X3) = 1/4 [d(X1,0) d(X2, not X3) + d(X1,1) d(X2,X3)]."""
    p = np.zeros((2, 2, 2))
    for x2 in range(2):
        for x3 in range(2):
            p[0, x2, x3] = 0.25 * (x2 != x3)
            p[1, x2, x3] = 0.25 * (x2 == x3)
    return LabeledState.classical(p, [("X1", 2), ("X2", 2), ("X3", 2)])


def negative_cmi_parts() -> tuple[float, float]:
    """(Pos, Neg) = (H(X1:X2), -H(X1:X2|X3))."""
    s = negative_cmi_distribution()
    pos = cmi(s, [["X1"], ["X2"]], speaker=[])
    neg = -cmi(s, [["X1"], ["X2"]], speaker=["X3"])
    return pos, neg


def negative_cmi_example(cmi_fn=cmi) -> float:
    """H(X1:X2:X3) of the example distribution; equals -1."""
    return cmi_fn(negative_cmi_distribution(), [["X1"], ["X2"], ["X3"]], speaker=[])


def check_negative_cmi(seed: int = 0, cmi_fn=cmi) -> McReport:
    start = time.perf_counter()
    value = negative_cmi_example(cmi_fn)
    pos, neg = negative_cmi_parts()
    residual = abs(value + 1.0)
    runtime = (time.perf_counter() - start) * 1000.0
    return McReport("negative-cmi", 1, int(residual > 1e-12), residual, seed, runtime, None,
                    {"value": value, "pos": pos, "neg": neg})


# ------------------------------------------------------------------ suites


@dataclass
class SuiteConfig:
    trials: int | None = None
    dims: tuple[int, int] | None = None
    seed: int = 0
    workers: int = 1


def _trials(cfg: SuiteConfig, default: int) -> int:
    return default if cfg.trials is None else cfg.trials


def _dims(cfg: SuiteConfig, default) -> tuple[int, int]:
    return tuple(default if cfg.dims is None else cfg.dims)


def suite_max_st(cfg: SuiteConfig) -> list[McReport]:
    return [check_max_st(_trials(cfg, 20), _dims(cfg, (2, 2)), cfg.seed, cfg.workers)]


def suite_posteriori(cfg: SuiteConfig) -> list[McReport]:
    return [check_posteriori(_trials(cfg, 100), _dims(cfg, (2, 2)), cfg.seed, cfg.workers)]


def suite_cond_dp(cfg: SuiteConfig) -> list[McReport]:
    t = _trials(cfg, 200)
    return [
        check_cond_dp(t, 2, bn.CLASSICAL, cfg.seed, cfg.workers),
        check_cond_dp(t, 2, bn.QUANTUM, cfg.seed, cfg.workers),
        check_cond_dp(max(1, t // 5), 3, bn.QUANTUM, cfg.seed, cfg.workers),
    ]


def suite_appendix_a(cfg: SuiteConfig) -> list[McReport]:
    return [check_appendix_a(_trials(cfg, 1000), _dims(cfg, (2, 2)), cfg.seed, cfg.workers)]


def suite_appendix_b(cfg: SuiteConfig) -> list[McReport]:
    return [check_appendix_b(_trials(cfg, 1000), _dims(cfg, (2, 2)), cfg.seed, cfg.workers)]


def suite_cond_sep(cfg: SuiteConfig) -> list[McReport]:
    t = _trials(cfg, 50)
    return [check_cond_separable(t, n, cfg.seed, cfg.workers) for n in (2, 3)]


def suite_negative_cmi(cfg: SuiteConfig) -> list[McReport]:
    return [check_negative_cmi(cfg.seed)]


SUITES: dict[str, Callable[[SuiteConfig], list[McReport]]] = {
    "max-st": suite_max_st,
    "posteriori": suite_posteriori,
    "cond-dp": suite_cond_dp,
    "appendix-a": suite_appendix_a,
    "appendix-b": suite_appendix_b,
    "cond-sep": suite_cond_sep,
    "negative-cmi": suite_negative_cmi,
}


def run_suite(name: str, cfg: SuiteConfig) -> list[McReport]:
    if name == "all":
        return [r for key in SUITES for r in SUITES[key](cfg)]
    try:
        return SUITES[name](cfg)
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES) + ['all']}") from None
