"""Gaussian-mixture auxiliary density for (x_T, y_T) under Q^z.

Each quadrature path (Z_1, ..., Z_d) of the Brownian driver is pushed
through a Milstein-type scheme for sigma together with trapezoidal updates
of the conditional mean M, conditional variance V and the discount state y.
Given the path, x_T is Gaussian N(M, V) and y_T is a point mass.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .model import ModelParams
from .quadrature import PRUNE_THRESHOLD, tensor_rule


class IJKState(NamedTuple):
    sigma_hat: float
    M_hat: float
    V_hat: float
    y_hat: float


@dataclass(frozen=True)
class MixtureComponent:
    w: float
    m: float
    v: float
    y: float


@dataclass(frozen=True)
class Mixture:
    """Components stored column-wise."""

    w: np.ndarray
    m: np.ndarray
    v: np.ndarray
    y: np.ndarray
    floored_steps: int = 0  # sigma excursions below zero that were floored

    def __len__(self) -> int:
        return len(self.w)

    def components(self) -> list[MixtureComponent]:
        return [MixtureComponent(*map(float, c)) for c in zip(self.w, self.m, self.v, self.y)]

    def to_csv(self) -> str:
        lines = ["w,m,v,y"]
        lines += [",".join(repr(float(t)) for t in c) for c in zip(self.w, self.m, self.v, self.y)]
        return "\n".join(lines) + "\n"


def _step(params: ModelParams, sigma, M, V, y, Z, delta):
    R0, R1, R2, nu, rho = params.R0, params.R1, params.R2, params.nu, params.rho
    z = params.z
    sq = math.sqrt(delta)
    sigma_next = (sigma + (R0 * R2 + sigma * (R1 * R2 - R0)) * delta
                  + nu * sigma * sq * Z + 0.5 * nu * nu * sigma * (delta * Z * Z - delta))
    avg = 0.5 * (sigma_next * sigma_next + sigma * sigma) * delta
    M_next = M + (-0.5 + z * rho) * avg + rho * sigma * sq * Z
    V_next = V + (1.0 - rho * rho) * avg
    y_next = y + 0.5 * z * z * avg + z * sigma * sq * Z
    return sigma_next, M_next, V_next, y_next


def ijk_step(params: ModelParams, state: IJKState, Z: float, delta: float) -> IJKState:
    """One step of the discretization; no flooring is applied here."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    return IJKState(*_step(params, *state, Z, delta))


def build_mixture(params: ModelParams, T: float, d: int = 1, K: int = 15,
                  prune_threshold: float | None = None) -> Mixture:
    """Mixture with one component per (surviving) point of the d-dimensional rule.

    ``prune_threshold`` defaults to PRUNE_THRESHOLD when d > 1 and to no
    pruning when d == 1. A sigma that steps below zero is floored at zero
    before the next step; the number of floored steps is recorded.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    if prune_threshold is None:
        prune_threshold = PRUNE_THRESHOLD if d > 1 else 0.0
    rule = tensor_rule(K, d, prune_threshold)
    delta = T / d
    n = len(rule)
    sigma = np.full(n, params.sigma0)
    M = np.full(n, params.x0)
    V = np.zeros(n)
    y = np.zeros(n)
    floored = 0
    for k in range(d):
        sigma_next, M, V, y = _step(params, sigma, M, V, y, rule.nodes[:, k], delta)
        negative = sigma_next < 0.0
        floored += int(negative.sum())
        sigma = np.where(negative, 0.0, sigma_next)
    if params.rho * params.rho == 1.0:
        V = np.zeros(n)
    return Mixture(rule.weights.copy(), M, V, y, floored)
