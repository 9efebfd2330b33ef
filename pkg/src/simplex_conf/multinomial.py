"""Multinomial pmf, support enumeration, sampling and central moments."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .domain import CountVector, SimplexPoint, make_count_vector
from .errors import CapExceeded, DimensionMismatch, DomainError
from .specfun import log_factorial_table

ENUMERATION_CAP = 10**8


@dataclass(frozen=True)
class MomentSet:
    """Central moments ``E|delta|^2``, ``E delta^3``, ``E|delta|^4`` of one coordinate."""

    m2: float
    m3: float
    m4: float


_STIRLING_TABLE_MAX = 15
# up to this n the direct log-factorial sum is exact enough and bit-stable
# on textbook cases (e.g. pmf 1/2 comes out as exactly 0.5)
_DIRECT_MAX_N = 20


def _stirling_error(k: np.ndarray) -> np.ndarray:
    """``log(k!) - (k log k - k + log(2 pi k) / 2)`` for integer ``k >= 1``."""
    k = np.asarray(k, dtype=float)
    out = np.empty_like(k)
    small = k <= _STIRLING_TABLE_MAX
    if np.any(small):
        ks = k[small]
        lf = log_factorial_table(_STIRLING_TABLE_MAX)
        out[small] = lf[ks.astype(np.int64)] - (ks * np.log(ks) - ks + 0.5 * np.log(2 * math.pi * ks))
    big = ~small
    if np.any(big):
        kb = k[big]
        inv2 = 1.0 / (kb * kb)
        out[big] = (1 / 12 - (1 / 360 - (1 / 1260 - (1 / 1680 - inv2 / 1188) * inv2) * inv2) * inv2) / kb
    return out


def _deviance(x: np.ndarray, m: np.ndarray) -> np.ndarray:
    """``x log(x/m) + m - x`` without cancellation (``0`` log 0 = 0)."""
    x = np.asarray(x, dtype=float)
    m = np.asarray(m, dtype=float)
    out = np.empty(np.broadcast(x, m).shape)
    x, m = np.broadcast_to(x, out.shape), np.broadcast_to(m, out.shape)
    near = np.abs(x - m) < 0.1 * (x + m)
    far = ~near
    with np.errstate(divide="ignore", invalid="ignore"):
        xf, mf = x[far], m[far]
        out[far] = np.where(xf > 0, xf * np.log(xf / mf), 0.0) + mf - xf
    if np.any(near):
        xn, mn = x[near], m[near]
        v = (xn - mn) / (xn + mn)
        total = (xn - mn) * v
        ej = 2 * xn * v
        v2 = v * v
        for j in range(1, 200):
            ej = ej * v2
            term = ej / (2 * j + 1)
            total = total + term
            if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
                break
        out[near] = total
    return out


def _log_pmf_rows(counts: np.ndarray, n: int, p_full: np.ndarray) -> np.ndarray:
    # saddle-point form: the large log-factorials cancel analytically, leaving
    # deviance terms and Stirling remainders that are all of moderate size
    counts = np.atleast_2d(counts)
    if n <= _DIRECT_MAX_N:
        lf = log_factorial_table(n)
        return lf[n] - lf[counts].sum(axis=1) + counts @ np.log(p_full)
    dev = _deviance(counts, n * p_full).sum(axis=1)
    pos = counts > 0
    kk = np.where(pos, counts, 1)
    corr = np.where(pos, 0.5 * np.log(2 * math.pi * kk) + _stirling_error(kk), 0.0).sum(axis=1)
    head = 0.5 * math.log(2 * math.pi * n) + float(_stirling_error(np.array([n]))[0])
    return head - corr - dev


def log_pmf(k: CountVector, p: SimplexPoint) -> float:
    """Log-probability of ``k`` under Multinomial(n, p)."""
    if k.d != p.d:
        raise DimensionMismatch(f"count vector has d={k.d}, simplex point has d={p.d}")
    return float(_log_pmf_rows(k.full[None, :], k.total, p.full)[0])


def log_pmf_array(counts: np.ndarray, n: int, p: SimplexPoint) -> np.ndarray:
    """Vectorized log-pmf for an ``(m, d+1)`` array of full count vectors summing to ``n``."""
    return _log_pmf_rows(np.asarray(counts), n, p.full)


def support_size(n: int, d: int) -> int:
    return math.comb(n + d, d)


def _check_cap(n: int, d: int, cap: int) -> None:
    size = support_size(n, d)
    if size > cap:
        raise CapExceeded(f"support of size C({n}+{d}, {d}) = {size} exceeds cap {cap}")


def support_array(n: int, d: int, cap: int = ENUMERATION_CAP) -> np.ndarray:
    """All lattice points of ``n`` times the simplex as an ``(m, d+1)`` int array.

    Rows are in lexicographic order on the first ``d`` coordinates and the
    last column holds the implied count.
    """
    if n < 0 or d < 1:
        raise ValueError(f"need n >= 0 and d >= 1, got n={n}, d={d}")
    _check_cap(n, d, cap)
    # build column by column: rows of partial prefixes with their remaining budget
    prefix = np.zeros((1, 0), dtype=np.int64)
    remaining = np.array([n], dtype=np.int64)
    for _ in range(d):
        reps = remaining + 1
        idx = np.repeat(np.arange(prefix.shape[0]), reps)
        starts = np.cumsum(reps) - reps
        col = np.arange(idx.size) - np.repeat(starts, reps)
        prefix = np.column_stack([prefix[idx], col])
        remaining = remaining[idx] - col
    return np.column_stack([prefix, remaining])


def enumerate_support(n: int, d: int, cap: int = ENUMERATION_CAP) -> Iterator[CountVector]:
    """Yield every count vector of total ``n`` in dimension ``d``, lexicographically."""
    _check_cap(n, d, cap)

    def rec(prefix: list, budget: int) -> Iterator[list]:
        if len(prefix) == d:
            yield prefix
            return
        for c in range(budget + 1):
            yield from rec(prefix + [c], budget - c)

    for counts in rec([], n):
        yield make_count_vector(counts, n)


def sample(p: SimplexPoint, n: int, stream: np.random.Generator) -> CountVector:
    """Draw one Multinomial(n, p) vector as ``n`` inverse-CDF categorical draws."""
    if n < 1:
        raise ValueError("n must be positive")
    cum = np.cumsum(p.weights)
    u = stream.random(n)
    cats = np.searchsorted(cum, u, side="right")
    full = np.bincount(cats, minlength=p.d + 1)
    return make_count_vector(full[:-1], n)


def central_moments(n: int, p_i: float) -> MomentSet:
    if not 0.0 < p_i < 1.0:
        raise DomainError(f"p_i must lie in (0, 1), got {p_i}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    q = 1.0 - p_i
    m2 = p_i * q
    m3 = p_i * (2 * p_i**2 - 3 * p_i + 1) / math.sqrt(n)
    m4 = 3 * p_i**2 * q**2 + p_i * (1 - 7 * p_i + 12 * p_i**2 - 6 * p_i**3) / n
    return MomentSet(m2, m3, m4)
