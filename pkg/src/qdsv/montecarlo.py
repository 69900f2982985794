"""Monte-Carlo benchmark under Q or Q^z with regression control variates.

Paths are split into fixed-size batches. Batch b draws its normals from a
Philox stream keyed by (seed, b), so results are identical for any number
of worker threads.
"""
from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .model import ModelParams, is_martingale
from .polynomial import conditional_moments, enumerate_basis, evaluate_basis_paths, initial_state, xy_moments
from .projection import BivariateBasis

log = logging.getLogger(__name__)

Z99 = 2.576
BATCH_SIZE = 1 << 14
DEFAULT_STEPS = 200


class Measure(str, enum.Enum):
    Q = "Q"
    QZ = "Qz"


class Scheme(str, enum.Enum):
    LOG_EULER = "LogEuler"
    IJK = "IJK"


@dataclass(frozen=True)
class SimulationConfig:
    n_paths: int = 1_000_000
    n_steps: int = DEFAULT_STEPS
    seed: int = 42
    measure: Measure = Measure.QZ
    scheme: Scheme = Scheme.LOG_EULER
    threads: int = 1
    backend: str | None = None  # None: compiled kernel when available

    def __post_init__(self):
        if self.n_paths < 1 or self.n_steps < 1:
            raise ValueError("n_paths and n_steps must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        object.__setattr__(self, "measure", Measure(self.measure))
        object.__setattr__(self, "scheme", Scheme(self.scheme))


@dataclass
class Paths:
    """Terminal values per path. ``y`` is the log Radon-Nikodym state."""

    x: np.ndarray
    sigma: np.ndarray
    y: np.ndarray
    config: SimulationConfig
    T: float


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    ci99_half_width: float
    n_paths: int
    plain_value: float | None = None
    plain_std_error: float | None = None
    controls: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["controls"] = list(self.controls)
        return d


def _batch_stream(seed: int, batch: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(batch,))))


def simulate_terminal(params: ModelParams, T: float, config: SimulationConfig) -> Paths:
    """Simulate (x_T, sigma_T, y_T) on ``config.n_paths`` paths.

    The volatility uses the configured scheme on the Q or Q^z drift; x and y
    use left-point Euler sums driven by the same normals, and the part of x
    orthogonal to the volatility driver is drawn exactly as one Gaussian with
    variance (1 - rho^2) * sum(sigma^2 dt).
    """
    if T <= 0:
        raise ValueError("T must be positive")
    kernel = kernels.get_kernel(config.backend)
    n, steps = config.n_paths, config.n_steps
    dt = T / steps
    x = np.empty(n)
    s = np.empty(n)
    y = np.empty(n)
    starts = list(range(0, n, BATCH_SIZE))
    args = (params.R0, params.R1, params.R2, params.nu, params.rho, params.x0, params.sigma0, dt,
            int(config.measure is Measure.QZ), int(config.scheme is Scheme.LOG_EULER))

    def run(b: int) -> None:
        lo = starts[b]
        hi = min(lo + BATCH_SIZE, n)
        rng = _batch_stream(config.seed, b)
        Z = rng.standard_normal((steps, hi - lo))
        B = rng.standard_normal(hi - lo)
        x[lo:hi], s[lo:hi], y[lo:hi] = kernel(*args, Z, B)

    if config.threads == 1:
        for b in range(len(starts)):
            run(b)
    else:
        with ThreadPoolExecutor(config.threads) as pool:
            list(pool.map(run, range(len(starts))))
    return Paths(x, s, y, config, T)


def _estimate(values: np.ndarray, controls: np.ndarray | None, control_means: np.ndarray | None,
              names: tuple[str, ...]) -> McEstimate:
    n = len(values)
    plain = float(values.mean())
    plain_se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    if controls is None or controls.shape[1] == 0 or n <= controls.shape[1] + 1:
        return McEstimate(plain, plain_se, Z99 * plain_se, n, plain, plain_se, ())
    Xc = controls - controls.mean(axis=0)
    Yc = values - plain
    coef, *_ = np.linalg.lstsq(Xc, Yc, rcond=None)
    value = plain - float((controls.mean(axis=0) - control_means) @ coef)
    resid = Yc - Xc @ coef
    se = float(np.sqrt(resid @ resid / (n - controls.shape[1] - 1)) / math.sqrt(n))
    return McEstimate(value, se, Z99 * se, n, plain, plain_se, names)


def _controls(params: ModelParams, paths: Paths) -> tuple[np.ndarray | None, np.ndarray | None, tuple[str, ...]]:
    """Regressors with analytically known means for the simulated measure.

    Under Q^z: the degree-2 monomials in (x, y). Under Q they are only known
    when R1 = 0 (then Q = Q^z and y = 0); otherwise S_T serves as control
    when S is a martingale.
    """
    measure = paths.config.measure
    if measure is Measure.QZ or params.R1 == 0.0:
        basis = BivariateBasis.of_degree(2)
        mu = xy_moments(params, 2, paths.T)
        keep = [i for i, (a, b) in enumerate(basis.exponents) if a + b > 0 and (measure is Measure.QZ or b == 0)]
        X = basis.evaluate(paths.x, paths.y)[:, keep]
        names = tuple(f"x^{basis.exponents[i][0]} y^{basis.exponents[i][1]}" for i in keep)
        return X, mu[keep], names
    if is_martingale(params):
        return np.exp(paths.x)[:, None], np.array([math.exp(params.x0)]), ("S_T",)
    return None, None, ()


def discounted_payoffs(paths: Paths, payoff: Callable) -> np.ndarray:
    values = np.asarray(payoff(np.exp(paths.x)), dtype=float)
    if values.ndim == 0:
        values = np.full(len(paths.x), float(values))
    if paths.config.measure is Measure.QZ:
        values = np.exp(-paths.y) * values
    return values


def price_from_paths(params: ModelParams, paths: Paths, payoff: Callable) -> McEstimate:
    X, mu, names = _controls(params, paths)
    return _estimate(discounted_payoffs(paths, payoff), X, mu, names)


def mc_price(params: ModelParams, payoff: Callable, T: float, config: SimulationConfig) -> McEstimate:
    """Control-variate price of E[F(S_T)] with a 99% confidence interval."""
    if not is_martingale(params):
        log.warning("R1 < rho*nu: S is a strict supermartingale, prices lose their usual meaning")
    return price_from_paths(params, simulate_terminal(params, T, config), payoff)


def mc_prices(params: ModelParams, payoffs: Sequence[Callable], T: float, config: SimulationConfig) -> list[McEstimate]:
    """Several payoffs priced on one shared set of paths."""
    paths = simulate_terminal(params, T, config)
    return [price_from_paths(params, paths, p) for p in payoffs]


@dataclass(frozen=True)
class MomentCheck:
    basis: tuple
    analytic: np.ndarray
    empirical: np.ndarray
    std_error: np.ndarray
    z_scores: np.ndarray

    @property
    def max_abs_z(self) -> float:
        return float(np.max(np.abs(self.z_scores))) if len(self.z_scores) else 0.0


def qz_moment_check(params: ModelParams, m: int, T: float, config: SimulationConfig) -> MomentCheck:
    """Compare exp(G_m T) H_m(x0, 0, sigma0) with Q^z sample means of every monomial."""
    if config.measure is not Measure.QZ:
        raise ValueError("moment check needs paths simulated under Qz")
    basis = tuple(enumerate_basis(m))
    analytic = conditional_moments(params, m, T, initial_state(params))
    if T == 0:
        return MomentCheck(basis, analytic, analytic.copy(), np.zeros_like(analytic), np.zeros_like(analytic))
    paths = simulate_terminal(params, T, config)
    H = evaluate_basis_paths(m, paths.x, paths.y, paths.sigma)
    emp = H.mean(axis=0)
    se = H.std(axis=0, ddof=1) / math.sqrt(len(paths.x)) if len(paths.x) > 1 else np.zeros(len(basis))
    with np.errstate(divide="ignore", invalid="ignore"):
        zs = np.where(se > 0, (emp - analytic) / np.where(se > 0, se, 1.0), 0.0)
    return MomentCheck(basis, analytic, emp, se, zs)

