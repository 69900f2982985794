"""Polynomial-expansion option prices and Black-Scholes implied volatilities.

The discounted payoff e^{-y} F(e^x) is projected onto Pol_n(R^2) under the
mixture weight, and the projection is integrated against the exact Q^z
moments of (x_T, y_T):

    pi_n = c_n . E^z[B_n(x_T, y_T)].
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import norm

from .errors import OutOfBounds
from .mixture import Mixture, build_mixture
from .model import ModelParams, is_martingale, require_valid
from .montecarlo import SimulationConfig, price_from_paths, simulate_terminal
from .projection import (BivariateBasis, call_payoff_vector, generic_payoff_vector, gram_matrix,
                         put_payoff_vector, solve)
from .polynomial import xy_moments

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Payoff:
    """European payoff on S_T: a call or put with ``strike``, or a vectorized ``func``."""

    kind: str
    strike: float | None = None
    func: Callable | None = None

    @classmethod
    def call(cls, strike: float) -> "Payoff":
        return cls("call", float(strike))

    @classmethod
    def put(cls, strike: float) -> "Payoff":
        return cls("put", float(strike))

    @classmethod
    def generic(cls, func: Callable) -> "Payoff":
        return cls("generic", None, func)

    def __call__(self, s):
        if self.kind == "call":
            return np.maximum(s - self.strike, 0.0)
        if self.kind == "put":
            return np.maximum(self.strike - s, 0.0)
        return self.func(s)


@dataclass(frozen=True)
class PricingRequest:
    params: ModelParams
    payoff: Payoff
    T: float
    n: int = 10
    d: int = 1
    K: int = 15
    prune_threshold: float | None = None  # None: library default for the given d

    def __post_init__(self):
        if self.T <= 0 or self.n < 0 or self.d < 1 or self.K < 1:
            raise ValueError("need T > 0, n >= 0, d >= 1, K >= 1")


@dataclass
class PriceResult:
    pi_by_degree: list[float]
    implied_vol_by_degree: list[float | None] | None
    mixture_size: int
    regularization_used: float
    martingale: bool = True
    regularization_by_degree: list[float] = field(default_factory=list)

    @property
    def price(self) -> float:
        return self.pi_by_degree[-1]

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def payoff_vector(mixture: Mixture, basis: BivariateBasis, payoff: Payoff, quad_order: int = 100) -> np.ndarray:
    if payoff.kind == "call":
        return call_payoff_vector(mixture, basis, payoff.strike)
    if payoff.kind == "put":
        return put_payoff_vector(mixture, basis, payoff.strike)
    return generic_payoff_vector(mixture, basis, payoff, quad_order)


def price(request: PricingRequest, with_implied_vol: bool = False) -> PriceResult:
    """pi_0, ..., pi_n for the request.

    One matrix exponential at degree n supplies the moments for every lower
    degree, since the graded basis of Pol_j is a prefix of Pol_n.
    """
    params = request.params
    require_valid(params)
    martingale = is_martingale(params)
    if not martingale:
        log.warning("R1 < rho*nu: S is not a martingale; expansion prices are not arbitrage-free")
    mixture = build_mixture(params, request.T, request.d, request.K, request.prune_threshold)
    basis = BivariateBasis.of_degree(request.n)
    D = gram_matrix(mixture, basis)
    f = payoff_vector(mixture, basis, request.payoff)
    moments = xy_moments(params, request.n, request.T)
    pis, lams = [], []
    for j in range(request.n + 1):
        N = (j + 1) * (j + 2) // 2
        c, lam = solve(D[:N, :N], f[:N])
        pis.append(float(c @ moments[:N]))
        lams.append(lam)
    ivs = None
    if with_implied_vol and request.payoff.kind == "call":
        ivs = [implied_vol_or_none(p, math.exp(params.x0), request.payoff.strike, request.T) for p in pis]
    return PriceResult(pis, ivs, len(mixture), lams[-1], martingale, lams)


# -- Black-Scholes ------------------------------------------------------------------

def bs_call(S0: float, strike: float, vol: float, T: float) -> float:
    """Black-Scholes call with zero rates and dividends."""
    if vol <= 0 or T <= 0:
        return max(S0 - strike, 0.0)
    sd = vol * math.sqrt(T)
    d1 = (math.log(S0 / strike) + 0.5 * sd * sd) / sd
    return S0 * norm.cdf(d1) - strike * norm.cdf(d1 - sd)


def bs_vega(S0: float, strike: float, vol: float, T: float) -> float:
    sd = vol * math.sqrt(T)
    d1 = (math.log(S0 / strike) + 0.5 * sd * sd) / sd
    return S0 * norm.pdf(d1) * math.sqrt(T)


def implied_vol(price: float, S0: float, strike: float, T: float, lo: float = 1e-6, hi: float = 5.0) -> float:
    """Black-Scholes implied volatility by bisection, polished with Newton steps."""
    intrinsic = max(S0 - strike, 0.0)
    if not intrinsic < price < S0:
        raise OutOfBounds(f"price {price} outside ({intrinsic}, {S0})")
    f_lo = bs_call(S0, strike, lo, T) - price
    f_hi = bs_call(S0, strike, hi, T) - price
    if f_lo > 0 or f_hi < 0:
        raise OutOfBounds(f"price {price} not bracketed by vols [{lo}, {hi}]")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = bs_call(S0, strike, mid, T) - price
        if f_mid > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-7:
            break
    vol = 0.5 * (lo + hi)
    for _ in range(20):
        diff = bs_call(S0, strike, vol, T) - price
        if abs(diff) < 1e-14 * S0:
            break
        vega = bs_vega(S0, strike, vol, T)
        if vega <= 0 or vol - diff / vega <= 0:
            break
        vol -= diff / vega
    return vol


def implied_vol_or_none(price: float, S0: float, strike: float, T: float) -> float | None:
    try:
        return implied_vol(price, S0, strike, T)
    except OutOfBounds:
        return None


# -- convergence table -----------------------------------------------------------------

TABLE_COLUMNS = ("T", "strike", "n", "pi_n", "implied_vol", "mc_estimate", "mc_ci_half_width", "inside_ci", "d")


@dataclass(frozen=True)
class TableRow:
    T: float
    strike: float
    n: int
    pi_n: float
    implied_vol: float | None
    mc_estimate: float | None
    mc_ci_half_width: float | None
    inside_ci: bool | None
    d: int


def convergence_table(params: ModelParams, maturities: Sequence[float], strikes: Sequence[float],
                      n_max: int = 10, d_values: Sequence[int] = (1,), K: int = 15,
                      prune_threshold: float | None = None,
                      mc_config: SimulationConfig | None = None) -> list[TableRow]:
    """Call prices pi_1..pi_n_max per (T, strike, d) next to the Monte-Carlo benchmark.

    The Monte-Carlo paths for one maturity are shared by every strike.
    ``mc_config=None`` skips the benchmark columns.
    """
    rows = []
    S0 = math.exp(params.x0)
    for T in maturities:
        mc = {}
        if mc_config is not None:
            paths = simulate_terminal(params, T, mc_config)
            for k in strikes:
                mc[k] = price_from_paths(params, paths, Payoff.call(k))
            del paths
        for d in d_values:
            for k in strikes:
                res = price(PricingRequest(params, Payoff.call(k), T, n_max, d, K, prune_threshold))
                est = mc.get(k)
                for n in range(1, n_max + 1):
                    pi = res.pi_by_degree[n]
                    inside = None if est is None else bool(abs(pi - est.value) <= est.ci99_half_width)
                    rows.append(TableRow(
                        T, k, n, pi, implied_vol_or_none(pi, S0, k, T),
                        None if est is None else est.value,
                        None if est is None else est.ci99_half_width,
                        inside, d,
                    ))
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    return f"{v:.17g}"


def table_to_csv(rows: Sequence[TableRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in TABLE_COLUMNS])
    return buf.getvalue()


def table_to_json(rows: Sequence[TableRow]) -> str:
    return json.dumps([asdict(r) for r in rows], indent=2)
