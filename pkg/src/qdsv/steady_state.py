"""Steady-state distribution of the volatility process.

The stationary density is proportional to

    x^(xi - 1) exp(-a / x - b x),   a = 2 R0 R2 / nu^2,  b = 2 R1 / nu^2,

with xi = -2 (R0 - R1 R2) / nu^2 - 1, which is a generalized inverse
Gaussian law with gamma and inverse-gamma limits.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DegenerateSteadyState, MomentDoesNotExist
from .model import ModelParams


class SteadyStateTag(enum.Enum):
    DEGENERATE_ZERO = "DegenerateZero"
    INVERSE_GAMMA = "InverseGamma"
    GAMMA = "Gamma"
    GIG = "GIG"


@dataclass(frozen=True)
class SteadyStateClass:
    tag: SteadyStateTag
    xi: float
    a: float
    b: float


def classify(params: ModelParams) -> SteadyStateClass:
    nu2 = params.nu**2
    xi = -2.0 * (params.R0 - params.R1 * params.R2) / nu2 - 1.0
    a = 2.0 * params.R0 * params.R2 / nu2
    b = 2.0 * params.R1 / nu2
    if params.R0 == 0.0:
        if params.R1 == 0.0 or 2.0 * params.R1 * params.R2 <= nu2:
            tag = SteadyStateTag.DEGENERATE_ZERO
        else:
            tag = SteadyStateTag.GAMMA
    elif params.R1 == 0.0:
        tag = SteadyStateTag.INVERSE_GAMMA
    else:
        tag = SteadyStateTag.GIG
    return SteadyStateClass(tag, xi, a, b)


# -- modified Bessel function of the second kind ---------------------------------

def _log_bessel_integrand(t, order, x):
    # log of exp(-x (cosh t - 1)) cosh(order t); cosh expanded to avoid overflow
    nt = abs(order) * t
    return -x * (np.cosh(t) - 1.0) + nt + np.log1p(np.exp(-2.0 * nt)) - math.log(2.0)


def log_bessel_k(order: float, x: float) -> float:
    """log K_order(x) for real order and x > 0.

    Uses K_v(x) = int_0^inf exp(-x cosh t) cosh(v t) dt, which is even in v,
    with the integrand rescaled by its peak so large orders do not overflow.
    """
    if x <= 0:
        raise ValueError("Bessel K argument must be positive")
    v = abs(order)
    # peak of -x (cosh t - 1) + v t sits at sinh t = v / x
    t_peak = math.asinh(v / x)
    log_peak = float(_log_bessel_integrand(t_peak, v, x))
    # walk right until the integrand is 60 e-folds below the peak
    t_max = max(t_peak, 1.0)
    while _log_bessel_integrand(t_max, v, x) > log_peak - 60.0:
        t_max *= 1.5

    def f(t):
        return math.exp(_log_bessel_integrand(t, v, x) - log_peak)

    breaks = [p for p in (t_peak,) if 0.0 < p < t_max]
    val, _ = integrate.quad(f, 0.0, t_max, points=breaks or None, epsabs=0.0, epsrel=1e-13, limit=200)
    return log_peak - x + math.log(val)


def bessel_k(order: float, x: float) -> float:
    return math.exp(log_bessel_k(order, x))


# -- density -----------------------------------------------------------------------

def _require_nondegenerate(cls: SteadyStateClass) -> None:
    if cls.tag is SteadyStateTag.DEGENERATE_ZERO:
        raise DegenerateSteadyState("volatility converges to zero almost surely")


def log_normalizer(params: ModelParams) -> float:
    """log C such that C x^(xi-1) exp(-a/x - b x) integrates to one."""
    cls = classify(params)
    _require_nondegenerate(cls)
    xi, a, b = cls.xi, cls.a, cls.b
    if cls.tag is SteadyStateTag.GAMMA:
        return xi * math.log(b) - math.lgamma(xi)
    if cls.tag is SteadyStateTag.INVERSE_GAMMA:
        shape = -xi
        return shape * math.log(a) - math.lgamma(shape)
    c = 4.0 * math.sqrt(params.R0 * params.R1 * params.R2) / params.nu**2
    return 0.5 * xi * math.log(params.R1 / (params.R0 * params.R2)) - math.log(2.0) - log_bessel_k(xi, c)


def log_density(params: ModelParams, x):
    cls = classify(params)
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = log_normalizer(params) + (cls.xi - 1.0) * np.log(x) - cls.a / x - cls.b * x
    return np.where(x > 0, out, -np.inf)


def density(params: ModelParams, x):
    """Normalized steady-state density of sigma, evaluated at ``x`` (scalar or array)."""
    out = np.exp(log_density(params, x))
    return float(out) if np.ndim(out) == 0 else out


def mode(params: ModelParams) -> float:
    cls = classify(params)
    _require_nondegenerate(cls)
    xi, a, b = cls.xi, cls.a, cls.b
    if b == 0.0:
        return a / (1.0 - xi)
    if a == 0.0:
        # gamma: the density decreases from the origin when xi <= 1
        return max(xi - 1.0, 0.0) / b
    return ((xi - 1.0) + math.sqrt((xi - 1.0) ** 2 + 4.0 * a * b)) / (2.0 * b)


def integrate_half_line(f, scale: float) -> float:
    """Adaptive Gauss-Kronrod on (0, inf) after x = scale * u / (1 - u)."""

    def g(u):
        if u <= 0.0 or u >= 1.0:
            return 0.0
        x = scale * u / (1.0 - u)
        return f(x) * scale / (1.0 - u) ** 2

    val, _ = integrate.quad(g, 0.0, 1.0, points=[0.5], epsabs=0.0, epsrel=1e-10, limit=500)
    return val


def mean(params: ModelParams) -> float:
    cls = classify(params)
    _require_nondegenerate(cls)
    if cls.tag is SteadyStateTag.GAMMA:
        return params.R2 - params.nu**2 / (2.0 * params.R1)
    if cls.tag is SteadyStateTag.INVERSE_GAMMA:
        # inverse gamma with shape -xi has a mean iff -xi > 1; then a / (-xi - 1) = R2
        if -cls.xi <= 1.0:
            raise MomentDoesNotExist(f"inverse-gamma shape {-cls.xi} <= 1")
        return params.R2
    c = 4.0 * math.sqrt(params.R0 * params.R1 * params.R2) / params.nu**2
    ratio = math.exp(log_bessel_k(cls.xi + 1.0, c) - log_bessel_k(cls.xi, c))
    return math.sqrt(params.R0 * params.R2 / params.R1) * ratio


def mean_lower_bound(params: ModelParams) -> float:
    """Special-function-free lower bound on the stationary mean (needs R1 > 0).

    Exact when R0 = 0.
    """
    cls = classify(params)
    if cls.tag not in (SteadyStateTag.GAMMA, SteadyStateTag.GIG) or params.R1 <= 0:
        raise ValueError("mean_lower_bound needs a gamma or GIG steady state with R1 > 0")
    nu2 = params.nu**2
    alpha = -2.0 * params.R0 * params.R2 / nu2
    beta = -2.0 * params.R1 / nu2
    r = cls.xi / beta
    return 0.5 * (-r + math.sqrt(r * r + 4.0 * alpha / beta))
