"""Log-gamma, the regularized lower incomplete gamma function, and chi-square helpers.

The incomplete gamma function uses the classical split at ``x = a + 1``:
power series below, modified Lentz continued fraction for the complement
above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, DomainError

_TINY = 1e-300
# iterations run until terms stop changing the sum in double precision;
# ``rel_tol`` is the accuracy still accepted if ``max_iter`` runs out first
_EPS = 2.0**-53


@dataclass(frozen=True)
class ToleranceConfig:
    rel_tol: float = 1e-13
    max_iter: int = 500

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


DEFAULT_TOL = ToleranceConfig()

# log((k-1)!) for integer k in 1..20, exact in double precision before the log
_LOG_FACTORIAL_SMALL = [0.0] + [math.log(math.factorial(k - 1)) for k in range(1, 21)]


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for ``x > 0``."""
    if not x > 0:
        raise DomainError(f"log_gamma requires x > 0, got {x}")
    if x <= 20 and x == int(x):
        return _LOG_FACTORIAL_SMALL[int(x)]
    return math.lgamma(x)


@lru_cache(maxsize=8)
def _log_factorial_table(n: int) -> tuple:
    return tuple(log_gamma(k + 1.0) for k in range(n + 1))


def log_factorial_table(n: int):
    """``log(k!)`` for ``k = 0..n`` as a numpy array (cached per ``n``)."""
    return np.asarray(_log_factorial_table(int(n)))


def _series(a: float, x: float, tol: ToleranceConfig) -> float:
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(tol.max_iter):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        if abs(term) >= abs(total) * tol.rel_tol:
            raise ConvergenceError(f"incomplete gamma series did not converge for a={a}, x={x}")
    return total * math.exp(-x + a * math.log(x) - log_gamma(a))


def _continued_fraction(a: float, x: float, tol: ToleranceConfig) -> float:
    # upper regularized gamma Q(a, x) by modified Lentz
    b = x + 1.0 - a
    c = 1.0 / _TINY
    dd = 1.0 / b
    h = dd
    for i in range(1, tol.max_iter + 1):
        an = -i * (i - a)
        b += 2.0
        dd = an * dd + b
        if abs(dd) < _TINY:
            dd = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        dd = 1.0 / dd
        delta = dd * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        if abs(delta - 1.0) >= tol.rel_tol:
            raise ConvergenceError(f"incomplete gamma continued fraction did not converge for a={a}, x={x}")
    return math.exp(-x + a * math.log(x) - log_gamma(a)) * h


def reg_lower_gamma(a: float, x: float, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Regularized lower incomplete gamma ``P(a, x) = gamma(a, x) / Gamma(a)``."""
    if not a > 0:
        raise DomainError(f"reg_lower_gamma requires a > 0, got {a}")
    if not x >= 0:
        raise DomainError(f"reg_lower_gamma requires x >= 0, got {x}")
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return min(1.0, _series(a, x, tol))
    return max(0.0, 1.0 - _continued_fraction(a, x, tol))


def chi2_cdf(d: int, ell: float) -> float:
    if d < 1:
        raise DomainError(f"degrees of freedom must be >= 1, got {d}")
    if ell < 0:
        raise DomainError(f"chi-square argument must be >= 0, got {ell}")
    return reg_lower_gamma(d / 2.0, ell / 2.0)


def chi2_pdf(d: int, ell: float) -> float:
    if d < 1:
        raise DomainError(f"degrees of freedom must be >= 1, got {d}")
    if ell <= 0:
        if d == 1 or ell < 0:
            raise DomainError(f"chi2_pdf undefined at ell={ell} for d={d}")
        return 0.5 if d == 2 else 0.0
    half = ell / 2.0
    return math.exp((d / 2.0 - 1.0) * math.log(half) - half - log_gamma(d / 2.0)) / 2.0


@lru_cache(maxsize=256)
def chi2_quantile(d: int, q: float) -> float:
    """Inverse of :func:`chi2_cdf` in its second argument.

    Bisection on ``[0, upper]``; ``upper`` doubles from 1 until the CDF
    exceeds ``q``.  The final bracket is narrowed to a relative width of
    about 1e-15.
    """
    if not 0.0 <= q < 1.0:
        raise DomainError(f"quantile level must be in [0, 1), got {q}")
    if d < 1:
        raise DomainError(f"degrees of freedom must be >= 1, got {d}")
    if q == 0.0:
        return 0.0
    lo, hi = 0.0, 1.0
    for _ in range(2000):
        if chi2_cdf(d, hi) > q:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise ConvergenceError(f"could not bracket chi-square quantile d={d}, q={q}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if chi2_cdf(d, mid) < q:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return 0.5 * (lo + hi)
