"""Chi-square tail probabilities via the regularized incomplete gamma function."""

from __future__ import annotations

import math

from .errors import DomainError

_EPS = 1e-16
_MAX_TERMS = 10_000
_TINY = 1e-300


def _lower_series(a: float, x: float) -> float:
    # P(a, x) = x^a e^-x / Gamma(a+1) * sum_n x^n / ((a+1)...(a+n))
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_TERMS):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _upper_fraction(a: float, x: float) -> float:
    # Modified Lentz evaluation of the continued fraction for Q(a, x).
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_TERMS):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gammaincc(a: float, x: float) -> float:
    """Regularized upper incomplete gamma ``Q(a, x)``."""
    if a <= 0:
        raise DomainError(f"shape must be positive, got {a!r}")
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x!r}")
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return 1.0 - _lower_series(a, x)
    return _upper_fraction(a, x)


def chisq_sf(x: float, df: int) -> float:
    """Upper-tail probability of the chi-square distribution with ``df`` degrees of freedom."""
    x = float(x)
    if math.isnan(x) or x < 0:
        raise DomainError(f"chi-square statistic must be nonnegative, got {x!r}")
    if df < 1:
        raise DomainError(f"degrees of freedom must be positive, got {df!r}")
    return gammaincc(0.5 * df, 0.5 * x)


def chisq_isf(p: float, df: int) -> float:
    """Critical value ``x`` with ``chisq_sf(x, df) == p``, found by bisection."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"tail probability must lie in (0, 1), got {p!r}")
    lo, hi = 0.0, float(df)
    while chisq_sf(hi, df) > p:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if chisq_sf(mid, df) > p:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return 0.5 * (lo + hi)
