"""Modified Bessel functions of the first kind, orders 0 and 1.

Self-contained so that the fading parameters do not depend on a particular
special-function library. Target accuracy is a relative error below 1e-12 on
[0, 100]. The ascending series has only positive terms, so it is used up to
``_SERIES_MAX``; beyond it the Hankel asymptotic expansion is summed until
its terms stop shrinking, which at x > 25 leaves an error near exp(-2x).
"""
from __future__ import annotations

import math

from .errors import DomainError

_SERIES_MAX = 25.0
_EPS = 1e-17


def _series(order: int, x: float) -> float:
    half = 0.5 * x
    q = half * half
    term = 1.0 if order == 0 else half
    total = term
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + order))
        total += term
        if term <= _EPS * total:
            return total


def _asymptotic_scaled(order: int, x: float) -> float:
    """``exp(-x) I_order(x)`` from the large-argument expansion."""
    mu = 4.0 * order * order
    term = 1.0
    total = 1.0
    prev = math.inf
    k = 0
    while True:
        k += 1
        term *= -(mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        if abs(term) >= prev or abs(term) < _EPS * abs(total):
            break
        total += term
        prev = abs(term)
    return total / math.sqrt(2.0 * math.pi * x)


def _check(x: float) -> float:
    x = float(x)
    if not x >= 0.0:
        raise DomainError(f"only non-negative arguments are supported, got {x}")
    return x


def bessel_i0e(x: float) -> float:
    """Exponentially scaled ``exp(-x) I0(x)``."""
    x = _check(x)
    if x <= _SERIES_MAX:
        return _series(0, x) * math.exp(-x)
    return _asymptotic_scaled(0, x)


def bessel_i1e(x: float) -> float:
    """Exponentially scaled ``exp(-x) I1(x)``."""
    x = _check(x)
    if x <= _SERIES_MAX:
        return _series(1, x) * math.exp(-x)
    return _asymptotic_scaled(1, x)


def bessel_i0(x: float) -> float:
    x = _check(x)
    if x <= _SERIES_MAX:
        return _series(0, x)
    return _asymptotic_scaled(0, x) * math.exp(x)


def bessel_i1(x: float) -> float:
    x = _check(x)
    if x <= _SERIES_MAX:
        return _series(1, x)
    return _asymptotic_scaled(1, x) * math.exp(x)
