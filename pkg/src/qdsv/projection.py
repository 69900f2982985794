"""Weighted least-squares projection of the discounted payoff onto Pol_n(R^2).

With a mixture weight w(x, y) = sum_k w_k phi(x; m_k, v_k) delta(y - y_k) the
normal equations D c = f have closed-form Gram entries (Gaussian moments)
and, for calls, a closed-form payoff vector.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import NonFiniteIntegrand, SingularGram
from .linalg import expm_nilpotent_apply
from .mixture import Mixture
from .polynomial import bivariate_exponents
from .quadrature import hermite_rule

REGULARIZATION_LADDER = (0.0, 1e-14, 1e-12, 1e-10)


@dataclass(frozen=True)
class BivariateBasis:
    n: int
    exponents: tuple[tuple[int, int], ...]

    @classmethod
    def of_degree(cls, n: int) -> "BivariateBasis":
        if n < 0:
            raise ValueError("degree must be non-negative")
        return cls(n, tuple(bivariate_exponents(n)))

    def __len__(self) -> int:
        return len(self.exponents)

    @property
    def alpha(self) -> np.ndarray:
        return np.array([a for a, _ in self.exponents], dtype=int)

    @property
    def beta(self) -> np.ndarray:
        return np.array([b for _, b in self.exponents], dtype=int)

    def evaluate(self, x, y) -> np.ndarray:
        """Basis functions at points (x, y); shape (n_points, N_n)."""
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        return np.stack([x**a * y**b for a, b in self.exponents], axis=-1)


@dataclass(frozen=True)
class ProjectionSystem:
    D: np.ndarray
    f: np.ndarray
    c: np.ndarray
    regularization: float


def gaussian_moment_generator(mu: float, var: float, n_max: int) -> np.ndarray:
    """Lower-triangular generator of dX = mu dt + sqrt(var) dW on 1, x, ..., x^n_max."""
    G = np.zeros((n_max + 1, n_max + 1))
    for j in range(1, n_max + 1):
        G[j, j - 1] = j * mu
        if j >= 2:
            G[j, j - 2] = 0.5 * j * (j - 1) * var
    return G


def gaussian_moments(mu: float, var: float, n_max: int) -> np.ndarray:
    """E[X^j], j = 0..n_max, for X ~ N(mu, var), as exp(G) applied to e_0.

    G is strictly lower triangular, so its exponential is a finite sum.
    """
    if var < 0:
        raise ValueError("variance must be non-negative")
    if var == 0:
        return float(mu) ** np.arange(n_max + 1)
    e0 = np.zeros(n_max + 1)
    e0[0] = 1.0
    return expm_nilpotent_apply(gaussian_moment_generator(mu, var, n_max), e0)


def _component_moments(mixture: Mixture, n_max: int) -> np.ndarray:
    """Gaussian moments 0..n_max per component; shape (n_components, n_max + 1)."""
    return np.stack([gaussian_moments(m, v, n_max) for m, v in zip(mixture.m, mixture.v)])


def gram_matrix(mixture: Mixture, basis: BivariateBasis) -> np.ndarray:
    if len(mixture) == 0:
        raise ValueError("mixture is empty")
    alpha, beta = basis.alpha, basis.beta
    n = basis.n
    mom = _component_moments(mixture, 2 * n)  # (K, 2n+1)
    ypow = mixture.y[:, None] ** np.arange(2 * n + 1)  # (K, 2n+1)
    A = alpha[:, None] + alpha[None, :]
    B = beta[:, None] + beta[None, :]
    # D_ij = sum_k w_k y_k^B_ij mom_k[A_ij]
    D = np.einsum("k,kij,kij->ij", mixture.w, ypow[:, B], mom[:, A])
    return 0.5 * (D + D.T)


def call_moments(m, v, strike: float, n_max: int) -> np.ndarray:
    """I_j = int (e^x - K)^+ x^j phi(x; m, v) dx for j = 0..n_max.

    Vectorized over components ``m``, ``v`` (v > 0); returns (len(m), n_max+1).
    Uses the integration-by-parts recursion in I and the auxiliary J. For
    components below the strike the forward recursion amplifies rounding by
    roughly a factor 3 per order, and I_0 itself is a difference of close
    terms, so everything runs in 30-digit arithmetic.
    """
    m = np.atleast_1d(np.asarray(m, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    out = np.empty((m.size, n_max + 1))
    with mpmath.workdps(_CALL_DPS):
        K = mpmath.mpf(strike)
        logK = mpmath.log(K)
        for c in range(m.size):
            out[c] = _call_recursion(mpmath.mpf(m[c]), mpmath.mpf(v[c]), K, logK, n_max)
    return out


_CALL_DPS = 30


def _call_recursion(m, v, K, logK, n_max: int) -> list[float]:
    sv = mpmath.sqrt(v)
    xi = (m - logK) / sv
    I_prev, I_cur = mpmath.mpf(0), mpmath.exp(m + v / 2) * mpmath.ncdf(xi + sv) - K * mpmath.ncdf(xi)
    J_prev, J_cur = mpmath.mpf(0), mpmath.ncdf(xi)
    edge = sv * mpmath.npdf(xi)
    out = [float(I_cur)]
    for j in range(1, n_max + 1):
        I_next = (m + v) * I_cur + v * (j - 1) * I_prev + K * v * J_cur
        J_next = m * J_cur + v * (j - 1) * J_prev + edge * logK ** (j - 1)
        I_prev, I_cur, J_prev, J_cur = I_cur, I_next, J_cur, J_next
        out.append(float(I_cur))
    return out


def _assemble_payoff(mixture: Mixture, basis: BivariateBasis, integrals: np.ndarray) -> np.ndarray:
    # f_i = sum_k w_k e^{-y_k} y_k^beta_i integrals[k, alpha_i]
    disc = mixture.w * np.exp(-mixture.y)
    ypow = mixture.y[:, None] ** basis.beta[None, :]
    return np.einsum("k,ki,ki->i", disc, ypow, integrals[:, basis.alpha])


def call_payoff_vector(mixture: Mixture, basis: BivariateBasis, strike: float) -> np.ndarray:
    """Payoff vector for F(s) = (s - K)^+.

    Components with zero variance (|rho| = 1) contribute the point value
    (e^m - K)^+ m^alpha instead of the recursion.
    """
    if strike <= 0:
        raise ValueError("strike must be positive")
    n = basis.n
    integrals = np.zeros((len(mixture), n + 1))
    pos = mixture.v > 0
    if pos.any():
        integrals[pos] = call_moments(mixture.m[pos], mixture.v[pos], strike, n)
    if (~pos).any():
        mk = mixture.m[~pos]
        integrals[~pos] = np.maximum(np.exp(mk) - strike, 0.0)[:, None] * mk[:, None] ** np.arange(n + 1)
    return _assemble_payoff(mixture, basis, integrals)


def put_payoff_vector(mixture: Mixture, basis: BivariateBasis, strike: float) -> np.ndarray:
    """Payoff vector for F(s) = (K - s)^+ via put = call - (e^x - K).

    Uses int e^x x^j phi(x; m, v) dx = e^{m + v/2} E[Y^j] with Y ~ N(m + v, v).
    """
    n = basis.n
    f_call = call_payoff_vector(mixture, basis, strike)
    forward = np.stack([
        math.exp(m + 0.5 * v) * gaussian_moments(m + v, v, n) - strike * gaussian_moments(m, v, n)
        for m, v in zip(mixture.m, mixture.v)
    ])
    return f_call - _assemble_payoff(mixture, basis, forward)


def generic_payoff_vector(mixture: Mixture, basis: BivariateBasis, payoff, quad_order: int = 100) -> np.ndarray:
    """Payoff vector for any vectorized payoff F(s), by Gauss-Hermite per component."""
    rule = hermite_rule(quad_order)
    u, wq = rule.nodes[:, 0], rule.weights
    x = mixture.m[:, None] + np.sqrt(mixture.v)[:, None] * u[None, :]  # (K, Q)
    with np.errstate(over="ignore", invalid="ignore"):
        values = np.asarray(payoff(np.exp(x)), dtype=float)
    if not np.all(np.isfinite(values)):
        raise NonFiniteIntegrand("payoff is not finite at some quadrature node")
    powers = x[:, :, None] ** np.arange(basis.n + 1)  # (K, Q, n+1)
    integrals = np.einsum("q,kq,kqj->kj", wq, values, powers)
    return _assemble_payoff(mixture, basis, integrals)


def solve(D, f) -> tuple[np.ndarray, float]:
    """Solve D c = f by Cholesky, escalating Tikhonov regularization if needed.

    D is symmetrically equilibrated by its diagonal first, which leaves the
    solution unchanged but tames monomial scaling. Returns (c, lambda) with
    lambda the ridge used, relative to trace(D) / N.
    """
    D = np.asarray(D, dtype=float)
    f = np.asarray(f, dtype=float)
    diag = np.diag(D).copy()
    scale = np.where(diag > 0, 1.0 / np.sqrt(np.where(diag > 0, diag, 1.0)), 1.0)
    Ds = D * scale[:, None] * scale[None, :]
    fs = f * scale
    ridge_unit = np.trace(Ds) / len(f)
    for lam in REGULARIZATION_LADDER:
        try:
            factor = cho_factor(Ds + lam * ridge_unit * np.eye(len(f)), lower=True)
        except LinAlgError:
            continue
        c = cho_solve(factor, fs) * scale
        if np.all(np.isfinite(c)):
            return c, lam
    raise SingularGram("Gram matrix is singular even after regularization")


def project(mixture: Mixture, basis: BivariateBasis, f: np.ndarray) -> ProjectionSystem:
    D = gram_matrix(mixture, basis)
    c, lam = solve(D, f)
    return ProjectionSystem(D, f, c, lam)
