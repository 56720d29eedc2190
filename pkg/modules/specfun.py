# modules/specfun.py
"""
SPECIAL FUNCTION ENGINE
Laguerre, Jacobi and terminating confluent hypergeometric polynomials with
analytic first derivatives, evaluated by three-term recurrences
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

__all__ = ["PolyEval", "laguerre", "jacobi", "confluent_1f1"]


@dataclass(frozen=True)
class PolyEval:
    value: ArrayLike
    derivative: ArrayLike


def _degree(n, name: str) -> int:
    if isinstance(n, (bool, np.bool_)):
        raise DomainError(f"{name} must be an integer, got {n!r}")
    if isinstance(n, (int, np.integer)):
        return int(n)
    if isinstance(n, (float, np.floating)) and float(n).is_integer():
        return int(n)
    raise DomainError(f"{name} must be an integer, got {n!r}")


def _parameter(value, name: str) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= -1.0:
        raise DomainError(f"{name}={value} must be finite and > -1")
    return value


def _argument(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("argument contains non-finite values")
    return arr, arr.ndim == 0


def _unwrap(arr: np.ndarray, scalar: bool) -> ArrayLike:
    return float(arr) if scalar else arr


def _laguerre_values(n: int, alpha: float, x: np.ndarray) -> np.ndarray:
    if n < 0:
        return np.zeros_like(x)
    prev = np.ones_like(x)
    if n == 0:
        return prev
    curr = 1.0 + alpha - x
    for k in range(1, n):
        prev, curr = curr, ((2 * k + 1 + alpha - x) * curr - (k + alpha) * prev) / (k + 1)
    return curr


def _jacobi_values(n: int, alpha: float, beta: float, x: np.ndarray) -> np.ndarray:
    if n < 0:
        return np.zeros_like(x)
    prev = np.ones_like(x)
    if n == 0:
        return prev
    ab = alpha + beta
    curr = 0.5 * ((alpha - beta) + (ab + 2.0) * x)
    for k in range(2, n + 1):
        c = 2 * k + ab
        a1 = 2 * k * (k + ab) * (c - 2)
        a2 = (c - 1) * (alpha * alpha - beta * beta)
        a3 = (c - 2) * (c - 1) * c
        a4 = 2 * (k + alpha - 1) * (k + beta - 1) * c
        prev, curr = curr, ((a2 + a3 * x) * curr - a4 * prev) / a1
    return curr


def laguerre(n: int, alpha: float, x: ArrayLike) -> PolyEval:
    """
    Generalized Laguerre polynomial L^alpha_n(x) and d/dx L^alpha_n(x).

    Index -1 is the zero function. The derivative uses
    d/dx L^alpha_n = -L^(alpha+1)_(n-1).
    """
    n = _degree(n, "n")
    if n < -1:
        raise DomainError(f"Laguerre degree n={n} must be >= -1")
    alpha = _parameter(alpha, "alpha")
    arr, scalar = _argument(x)
    if np.any(arr < 0.0):
        raise DomainError("Laguerre argument must be >= 0")

    value = _laguerre_values(n, alpha, arr)
    derivative = -_laguerre_values(n - 1, alpha + 1.0, arr)
    return PolyEval(_unwrap(value, scalar), _unwrap(derivative, scalar))


def jacobi(lam: int, alpha: float, beta: float, x: ArrayLike) -> PolyEval:
    """
    Jacobi polynomial P^(alpha,beta)_lam(x) and its x-derivative on [-1, 1].

    Index -1 is the zero function. The derivative uses
    d/dx P^(a,b)_n = (n+a+b+1)/2 * P^(a+1,b+1)_(n-1).
    """
    lam = _degree(lam, "lambda")
    if lam < -1:
        raise DomainError(f"Jacobi degree lambda={lam} must be >= -1")
    alpha = _parameter(alpha, "alpha")
    beta = _parameter(beta, "beta")
    arr, scalar = _argument(x)
    if np.any(np.abs(arr) > 1.0):
        raise DomainError("Jacobi argument must lie in [-1, 1]")

    value = _jacobi_values(lam, alpha, beta, arr)
    if lam <= 0:
        derivative = np.zeros_like(arr)
    else:
        derivative = 0.5 * (lam + alpha + beta + 1.0) * _jacobi_values(lam - 1, alpha + 1.0, beta + 1.0, arr)
    return PolyEval(_unwrap(value, scalar), _unwrap(derivative, scalar))


def _rising_over_factorial(b: float, n: int) -> float:
    # (b)_n / n! = binom(n + b - 1, n)
    out = 1.0
    for k in range(n):
        out *= (b + k) / (k + 1)
    return out


def confluent_1f1(n: int, b: float, x: ArrayLike) -> ArrayLike:
    """
    Terminating series 1F1(-n; b; x).

    For b > 0 this is L^(b-1)_n(x) / binom(n+b-1, n), evaluated by the
    Laguerre recurrence; the alternating power series cancels badly for
    large x. Other b are summed term by term with math.fsum per node.
    """
    n = _degree(n, "n")
    if n < 0:
        raise DomainError(f"1F1 truncation order n={n} must be >= 0")
    b = float(b)
    if not math.isfinite(b):
        raise DomainError(f"1F1 parameter b={b} must be finite")
    if b <= 0.0 and float(b).is_integer() and -b <= n - 1:
        raise DomainError(f"1F1 parameter b={b} hits a pole of the series truncated at n={n}")
    arr, scalar = _argument(x)

    if b > 0.0:
        total = _laguerre_values(n, b - 1.0, arr) / _rising_over_factorial(b, n)
        return _unwrap(total, scalar)

    terms = np.empty((n + 1,) + arr.shape)
    terms[0] = 1.0
    for k in range(n):
        terms[k + 1] = terms[k] * (k - n) * arr / ((b + k) * (k + 1))
    flat_terms = terms.reshape(n + 1, -1)
    total = np.array([math.fsum(flat_terms[:, i]) for i in range(flat_terms.shape[1])]).reshape(arr.shape)
    return _unwrap(total, scalar)
