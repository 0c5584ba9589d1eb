"""Regularized incomplete gamma function."""

import math

EPS = 1e-15
MAX_ITER = 10_000
_TINY = 1e-300


def _series(s, x):
    # P(s, x) = x^s e^-x / Gamma(s+1) * sum_n x^n / ((s+1)...(s+n))
    term = total = 1.0 / s
    ap = s
    for _ in range(MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * EPS:
            break
    else:
        raise ArithmeticError(f"series for P({s}, {x}) did not converge")
    return total * math.exp(-x + s * math.log(x) - math.lgamma(s))


def _continued_fraction(s, x):
    # Q(s, x) by modified Lentz on the Legendre continued fraction.
    b = x + 1.0 - s
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, MAX_ITER):
        an = -i * (i - s)
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
        if abs(delta - 1.0) < EPS:
            break
    else:
        raise ArithmeticError(f"continued fraction for Q({s}, {x}) did not converge")
    return math.exp(-x + s * math.log(x) - math.lgamma(s)) * h


def gammainc_lower(s: float, x: float) -> float:
    """Regularized lower incomplete gamma P(s, x) for s > 0, x >= 0.

    P(k, x/scale) is the CDF at x of a Gamma(k, scale) variable.
    """
    if s <= 0:
        raise ValueError("shape must be positive")
    if x < 0:
        raise ValueError("x must be nonnegative")
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < s + 1.0:
        return min(1.0, _series(s, x))
    return max(0.0, 1.0 - _continued_fraction(s, x))


def gammainc_upper(s: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(s, x) = 1 - P(s, x)."""
    if s <= 0:
        raise ValueError("shape must be positive")
    if x < 0:
        raise ValueError("x must be nonnegative")
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < s + 1.0:
        return max(0.0, 1.0 - _series(s, x))
    return min(1.0, _continued_fraction(s, x))
