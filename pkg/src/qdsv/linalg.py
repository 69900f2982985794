"""Matrix exponentials: dense with an overflow guard, and exact for nilpotent matrices."""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import NonFiniteMoments


def expm(A) -> np.ndarray:
    """exp(A) for a square real matrix (Pade scaling and squaring via scipy).

    The generator matrices are lower triangular in the graded basis order,
    a structure scipy's implementation exploits for accuracy.
    Raises NonFiniteMoments if the result overflows.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expm needs a square matrix")
    if A.shape[0] == 0:
        return A.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        F = scipy.linalg.expm(A)
    if not np.all(np.isfinite(F)):
        raise NonFiniteMoments("matrix exponential overflowed; reduce the degree or horizon")
    return F


def expm_nilpotent_apply(A, v) -> np.ndarray:
    """exp(A) v for strictly triangular A, where the exponential series is finite."""
    A = np.asarray(A, dtype=float)
    term = np.asarray(v, dtype=float).copy()
    out = term.copy()
    for k in range(1, A.shape[0]):
        term = A @ term / k
        if not term.any():
            break
        out += term
    return out
