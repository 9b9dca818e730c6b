"""Random states, unitaries and tables for Monte Carlo checks."""

from __future__ import annotations

import numpy as np


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent generator for one trial, a pure function of (seed, trial)."""
    return np.random.default_rng(np.random.SeedSequence([seed, trial]))


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix with phase correction."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def random_unit_vector(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return z / np.linalg.norm(z)


def random_amplitudes(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    """Haar-random normalized complex amplitude tensor of the given shape."""
    return random_unit_vector(rng, int(np.prod(shape))).reshape(shape)


def random_simplex(rng: np.random.Generator, n: int) -> np.ndarray:
    """Flat Dirichlet sample."""
    return rng.dirichlet(np.ones(n))


def random_density(rng: np.random.Generator, n: int, rank: int | None = None) -> np.ndarray:
    """Random density matrix from a Ginibre n x rank factor."""
    rank = n if rank is None else rank
    g = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_stochastic_table(rng: np.random.Generator, card: int, parent_cards: tuple[int, ...]) -> np.ndarray:
    """Table T[x, pa...] with each column a flat-Dirichlet probability vector."""
    cols = int(np.prod(parent_cards)) if parent_cards else 1
    t = rng.dirichlet(np.ones(card), size=cols).T
    return t.reshape((card, *parent_cards))


def random_amplitude_table(rng: np.random.Generator, card: int, parent_cards: tuple[int, ...]) -> np.ndarray:
    """Table A[x, pa...] whose columns are Haar-random unit vectors."""
    cols = int(np.prod(parent_cards)) if parent_cards else 1
    z = rng.standard_normal((card, cols)) + 1j * rng.standard_normal((card, cols))
    z /= np.linalg.norm(z, axis=0)
    return z.reshape((card, *parent_cards))
