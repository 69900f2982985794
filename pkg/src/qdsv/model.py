"""Model parameters and closed-form diagnostics.

The volatility follows

    d sigma = (R0 + R1 sigma)(R2 - sigma) dt + nu sigma dW,

and the log-price x = log S has drift -sigma^2 / 2 and diffusion
sigma (rho dW + sqrt(1 - rho^2) dB), with zero rates and no dividends.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InvalidParams, NotMartingale

PARAM_KEYS = ("R0", "R1", "R2", "nu", "rho", "sigma0", "x0")


@dataclass(frozen=True)
class ModelParams:
    R0: float
    R1: float
    R2: float
    nu: float
    rho: float
    sigma0: float
    x0: float = 0.0

    @property
    def z(self) -> float:
        """Girsanov intensity R1 / nu of the measure change."""
        return self.R1 / self.nu

    def replace(self, **changes) -> "ModelParams":
        values = {k: getattr(self, k) for k in PARAM_KEYS}
        values.update(changes)
        return ModelParams(**values)

    def to_dict(self) -> dict:
        return {k: float(getattr(self, k)) for k in PARAM_KEYS}

    def to_json(self) -> str:
        """Canonical JSON: fixed key order, 17 significant digits."""
        body = ", ".join(f'"{k}": {float(getattr(self, k)):.17g}' for k in PARAM_KEYS)
        return "{" + body + "}\n"

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        missing = [k for k in PARAM_KEYS if k not in data]
        if missing:
            raise InvalidParams(f"missing parameter(s): {', '.join(missing)}")
        unknown = sorted(set(data) - set(PARAM_KEYS))
        if unknown:
            raise InvalidParams(f"unknown parameter(s): {', '.join(unknown)}")
        return cls(**{k: float(data[k]) for k in PARAM_KEYS})

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path: str | Path) -> "ModelParams":
        return cls.from_json(Path(path).read_text())


#: Parameter set of the numerical study.
REFERENCE_PARAMS = ModelParams(R0=5.0, R1=5.0, R2=0.2, nu=1.0, rho=-0.5, sigma0=0.2, x0=0.0)


@dataclass
class ValidationReport:
    checks: dict[str, bool] = field(default_factory=dict)
    reasons: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def __bool__(self) -> bool:
        return self.ok


def validate(params: ModelParams) -> ValidationReport:
    """Check every parameter constraint and report each one.

    Negative R1 is rejected because the volatility then explodes in finite
    time; the remaining checks are the positivity and correlation bounds.
    """
    rules = [
        ("R0", params.R0 >= 0, "R0 must be >= 0"),
        ("R1", params.R1 >= 0, "R1 must be >= 0 (volatility explodes in finite time otherwise)"),
        ("R2", params.R2 > 0, "R2 must be > 0"),
        ("nu", params.nu > 0, "nu must be > 0"),
        ("rho", -1.0 <= params.rho <= 1.0, "rho out of [-1, 1]"),
        ("sigma0", params.sigma0 > 0, "sigma0 must be > 0"),
        ("x0", math.isfinite(params.x0), "x0 must be finite"),
    ]
    report = ValidationReport()
    for name, passed, reason in rules:
        value = getattr(params, name)
        passed = bool(passed) and math.isfinite(value)
        report.checks[name] = passed
        if not passed:
            report.reasons.append(reason)
    return report


def require_valid(params: ModelParams) -> None:
    report = validate(params)
    if not report.ok:
        raise InvalidParams("; ".join(report.reasons))


def is_martingale(params: ModelParams) -> bool:
    """True iff S is a true martingale, i.e. R1 >= rho * nu (no tolerance)."""
    return params.R1 >= params.rho * params.nu


class MomentStatus(enum.Enum):
    FINITE = "Finite"
    INFINITE = "Infinite"
    BOUNDARY_FINITE = "BoundaryFinite"
    BOUNDARY_UNKNOWN = "BoundaryUnknown"


def moment_threshold(params: ModelParams, m: float) -> float:
    """nu * (rho m + sqrt(m^2 - m)), the R1 level separating finite from infinite E[S^m]."""
    return params.nu * (params.rho * m + math.sqrt(m * m - m))


def moment_status(params: ModelParams, m: float) -> MomentStatus:
    """Classify E[S_T^m] for an exponent m outside [0, 1]."""
    if 0.0 <= m <= 1.0:
        raise ValueError(f"moment order must lie outside [0, 1], got {m}")
    threshold = moment_threshold(params, m)
    if params.R1 > threshold:
        return MomentStatus.FINITE
    if params.R1 < threshold:
        return MomentStatus.INFINITE
    if params.R0 >= params.R1 * params.R2:
        return MomentStatus.BOUNDARY_FINITE
    return MomentStatus.BOUNDARY_UNKNOWN


@dataclass(frozen=True)
class Infinite:
    """Signed infinity of the extended reals, kept distinct from float values."""

    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    def __neg__(self) -> "Infinite":
        return Infinite(-self.sign)

    def __add__(self, other: float) -> "Infinite":
        if isinstance(other, Infinite) and other.sign != self.sign:
            raise ArithmeticError("inf - inf is undefined")
        return self

    __radd__ = __add__

    def __sub__(self, other: float) -> "Infinite":
        return self + (-other)

    def __float__(self) -> float:
        return math.copysign(math.inf, self.sign)

    def __str__(self) -> str:
        return "+inf" if self.sign > 0 else "-inf"


POS_INF, NEG_INF = Infinite(1), Infinite(-1)


@dataclass(frozen=True)
class CriticalMoments:
    """Critical moments m_minus <= 0 and m_plus >= 1.

    An infinite critical moment (only when |rho| = 1) is an ``Infinite``.
    """

    m_minus: float | Infinite
    m_plus: float | Infinite


def critical_moment_polynomial(params: ModelParams, m: float) -> float:
    """p(m) = m^2 (1 - rho^2) + (2 z rho - 1) m - z^2; zero at both critical moments."""
    z, rho = params.z, params.rho
    return m * m * (1.0 - rho * rho) + (2.0 * z * rho - 1.0) * m - z * z


def critical_moments(params: ModelParams) -> CriticalMoments:
    if not is_martingale(params):
        raise NotMartingale(f"R1={params.R1} < rho*nu={params.rho * params.nu}")
    R1, nu, rho = params.R1, params.nu, params.rho
    if rho == 1.0:
        return CriticalMoments(NEG_INF, R1 * R1 / (2.0 * R1 * nu - nu * nu) + 0.0)
    if rho == -1.0:
        return CriticalMoments(R1 * R1 / (-2.0 * R1 * nu - nu * nu) + 0.0, POS_INF)
    one_minus = 1.0 - rho * rho
    if R1 == 0.0:
        return CriticalMoments(0.0, 1.0 / one_minus)
    z = R1 / nu
    b = 1.0 - 2.0 * z * rho
    disc = math.sqrt(b * b + 4.0 * one_minus * z * z)
    # avoid cancellation in the smaller-magnitude root
    if b >= 0.0:
        m_plus = (b + disc) / (2.0 * one_minus)
        m_minus = -z * z / (one_minus * m_plus)
    else:
        m_minus = (b - disc) / (2.0 * one_minus)
        m_plus = -z * z / (one_minus * m_minus)
    return CriticalMoments(m_minus, m_plus)


def lee_beta(x: float | Infinite) -> float:
    """beta(x) = 2 - 4 (sqrt(x^2 + x) - x) on x >= 0, with beta(+inf) = 0."""
    if isinstance(x, Infinite) or x == math.inf:
        if float(x) < 0:
            raise ValueError("beta is defined on x >= 0")
        return 0.0
    if x < 0:
        raise ValueError("beta is defined on x >= 0")
    # sqrt(x^2+x) - x == x / (sqrt(x^2+x) + x), stable for large x
    root = math.sqrt(x * x + x)
    return 2.0 - 4.0 * (x / (root + x) if x > 0 else 0.0)


def smile_tail_slopes(params: ModelParams, T: float) -> tuple[float, float]:
    """Asymptotic slopes of sigma_BS^2 / |log-moneyness| in the left and right wings."""
    if T <= 0:
        raise ValueError("T must be positive")
    cm = critical_moments(params)
    return lee_beta(-cm.m_minus) / T, lee_beta(cm.m_plus - 1.0) / T


@dataclass(frozen=True)
class PriceBound:
    kind: str  # "upper" or "lower"
    value: float


def price_bound(params: ModelParams, S_t: float, sigma_t: float, horizon: float) -> PriceBound | None:
    """Pathwise bound on S_{t+horizon} in the extreme correlation cases, if one applies."""
    R0, R1, R2, nu, rho = params.R0, params.R1, params.R2, params.nu, params.rho
    exponent = sigma_t / nu + R0 * R2 * horizon / nu
    if rho == -1.0 and R0 >= R1 * R2:
        return PriceBound("upper", S_t * math.exp(exponent))
    if rho == 1.0 and R0 >= R1 * R2 and 2.0 * R1 >= nu:
        return PriceBound("lower", S_t * math.exp(-exponent))
    return None
