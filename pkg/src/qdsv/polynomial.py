"""Moment engine for (x, y, sigma) under the measure Q^z.

Under Q^z the quadratic term of the volatility drift disappears and the
monomials x^alpha y^beta sigma^gamma with

    alpha + beta <= m,   gamma <= 2 (m - alpha - beta)

span a space P_m that the generator maps into itself. Conditional moments
then follow from a single matrix exponential.

Basis order is graded and fixed everywhere in the package: ascending
alpha + beta, then alpha, then beta, then gamma.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .linalg import expm
from .model import ModelParams


class BasisIndex(NamedTuple):
    alpha: int  # power of x
    beta: int  # power of y
    gamma: int  # power of sigma


class StatePoint(NamedTuple):
    x: float
    y: float
    sigma: float


def basis_dimension(m: int) -> int:
    """m^3/3 + 3m^2/2 + 13m/6 + 1, in exact integer arithmetic."""
    if m < 0:
        raise ValueError("degree must be non-negative")
    return (2 * m**3 + 9 * m**2 + 13 * m + 6) // 6


def bivariate_exponents(n: int) -> list[tuple[int, int]]:
    """(alpha, beta) pairs with alpha + beta <= n in graded order."""
    return [(a, k - a) for k in range(n + 1) for a in range(k + 1)]


@lru_cache(maxsize=None)
def _basis(m: int) -> tuple[BasisIndex, ...]:
    return tuple(
        BasisIndex(a, b, g)
        for a, b in bivariate_exponents(m)
        for g in range(2 * (m - a - b) + 1)
    )


def enumerate_basis(m: int) -> list[BasisIndex]:
    if m < 0:
        raise ValueError("degree must be non-negative")
    return list(_basis(m))


@lru_cache(maxsize=None)
def basis_position(m: int) -> dict[BasisIndex, int]:
    return {b: i for i, b in enumerate(_basis(m))}


def in_space(idx: BasisIndex, m: int) -> bool:
    a, b, g = idx
    return min(a, b, g) >= 0 and a + b <= m and g <= 2 * (m - a - b)


@dataclass(frozen=True)
class GeneratorMatrix:
    m: int
    entries: np.ndarray
    basis: tuple[BasisIndex, ...]

    @property
    def size(self) -> int:
        return len(self.basis)


def generator_terms(params: ModelParams, idx: BasisIndex) -> list[tuple[float, BasisIndex]]:
    """Generator applied to one monomial, as (coefficient, target monomial) pairs."""
    a, b, g = idx
    z, rho, nu = params.z, params.rho, params.nu
    R0, R1, R2 = params.R0, params.R1, params.R2
    terms = [
        (a * (z * rho - 0.5), (a - 1, b, g + 2)),
        (b * 0.5 * z * z, (a, b - 1, g + 2)),
        (g * R0 * R2, (a, b, g - 1)),
        (g * (R1 * R2 - R0), (a, b, g)),
        (0.5 * a * (a - 1), (a - 2, b, g + 2)),
        (0.5 * b * (b - 1) * z * z, (a, b - 2, g + 2)),
        (0.5 * g * (g - 1) * nu * nu, (a, b, g)),
        (a * b * z * rho, (a - 1, b - 1, g + 2)),
        (a * g * nu * rho, (a - 1, b, g + 1)),
        (b * g * z * nu, (a, b - 1, g + 1)),
    ]
    return [(c, BasisIndex(*t)) for c, t in terms if c != 0.0]


def build_generator(params: ModelParams, m: int) -> GeneratorMatrix:
    """Matrix G_m with (generator h_i) = sum_j G[i, j] h_j over the basis of P_m."""
    basis = _basis(m)
    pos = basis_position(m)
    G = np.zeros((len(basis), len(basis)))
    for i, idx in enumerate(basis):
        for coeff, target in generator_terms(params, idx):
            j = pos.get(target)
            if j is None:
                raise AssertionError(f"generator maps {idx} outside P_{m}: {target}")
            G[i, j] += coeff
    return GeneratorMatrix(m, G, basis)


def evaluate_basis(m: int, state: StatePoint) -> np.ndarray:
    """H_m(state): every basis monomial evaluated at one point."""
    x, y, s = state
    return np.array([x**a * y**b * s**g for a, b, g in _basis(m)], dtype=float)


def evaluate_basis_paths(m: int, x, y, sigma) -> np.ndarray:
    """Basis monomials evaluated along arrays of states; shape (n_points, d_m)."""
    x, y, sigma = (np.asarray(v, dtype=float) for v in (x, y, sigma))
    top = 2 * m
    xp = np.stack([x**k for k in range(m + 1)])
    yp = np.stack([y**k for k in range(m + 1)])
    sp = np.stack([sigma**k for k in range(top + 1)])
    return np.stack([xp[a] * yp[b] * sp[g] for a, b, g in _basis(m)], axis=-1)


def propagator(params: ModelParams, m: int, tau: float) -> np.ndarray:
    """exp(G_m tau)."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    G = build_generator(params, m).entries
    if tau == 0:
        return np.eye(G.shape[0])
    return expm(G * tau)


def conditional_moments(params: ModelParams, m: int, tau: float, state: StatePoint) -> np.ndarray:
    """E^z[H_m(x, y, sigma) at t + tau | state at t] = exp(G_m tau) H_m(state)."""
    H = evaluate_basis(m, StatePoint(*state))
    if tau == 0:
        return H
    return propagator(params, m, tau) @ H


def initial_state(params: ModelParams) -> StatePoint:
    return StatePoint(params.x0, 0.0, params.sigma0)


def xy_moments(params: ModelParams, n: int, T: float) -> np.ndarray:
    """E^z[x_T^alpha y_T^beta] for the bivariate graded basis of degree n."""
    moments = conditional_moments(params, n, T, initial_state(params))
    pos = basis_position(n)
    return np.array([moments[pos[BasisIndex(a, b, 0)]] for a, b in bivariate_exponents(n)])


def generator_csv(gen: GeneratorMatrix) -> str:
    """Dump G_m as CSV with monomial labels, for inspection."""
    labels = [f"x{a}y{b}s{g}" for a, b, g in gen.basis]
    rows = ["," + ",".join(labels)]
    for label, row in zip(labels, gen.entries):
        rows.append(label + "," + ",".join(repr(float(v)) for v in row))
    return "\n".join(rows) + "\n"
