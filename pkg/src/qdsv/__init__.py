"""Polynomial-expansion pricing for a quadratic-drift stochastic volatility model."""
from .errors import (DegenerateSteadyState, InvalidParams, MomentDoesNotExist, NonFiniteIntegrand,
                     NonFiniteMoments, NotMartingale, OutOfBounds, QdsvError, SingularGram)
from .kernels import BACKEND
from .model import (REFERENCE_PARAMS, CriticalMoments, ModelParams, MomentStatus, critical_moments, is_martingale,
                    moment_status, price_bound, smile_tail_slopes, validate)
from .montecarlo import McEstimate, Measure, Scheme, SimulationConfig, mc_price, mc_prices
from .pricer import Payoff, PriceResult, PricingRequest, convergence_table, implied_vol, price

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "REFERENCE_PARAMS", "CriticalMoments", "DegenerateSteadyState", "InvalidParams", "McEstimate",
    "Measure", "ModelParams", "MomentDoesNotExist", "MomentStatus", "NonFiniteIntegrand", "NonFiniteMoments",
    "NotMartingale", "OutOfBounds", "Payoff", "PriceResult", "PricingRequest", "QdsvError", "Scheme",
    "SimulationConfig", "SingularGram", "convergence_table", "critical_moments", "implied_vol", "is_martingale",
    "mc_price", "mc_prices", "moment_status", "price", "price_bound", "smile_tail_slopes", "validate",
]
