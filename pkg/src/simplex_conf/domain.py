"""Core value types: points of the open simplex, count vectors, model parameters.

Everything here indexes categories ``1..d+1``; the last category is implied
by the others and stored explicitly so that it is a first-class coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NonInterior


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SimplexPoint:
    """Weights ``p_1..p_d`` of a ``(d+1)``-category distribution.

    Use :func:`make_simplex_point` to build a validated instance.
    """

    weights: np.ndarray
    last_weight: float

    @property
    def d(self) -> int:
        return self.weights.shape[0]

    @property
    def full(self) -> np.ndarray:
        """All ``d+1`` weights."""
        return np.append(self.weights, self.last_weight)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SimplexPoint):
            return NotImplemented
        return np.array_equal(self.weights, other.weights)

    def __hash__(self) -> int:
        return hash(self.weights.tobytes())

    def __repr__(self) -> str:
        w = ", ".join(f"{x:.6g}" for x in self.weights)
        return f"SimplexPoint(({w}), last={self.last_weight:.6g})"


def make_simplex_point(weights) -> SimplexPoint:
    """Validate ``weights`` and return a :class:`SimplexPoint`.

    The check is exact: a weight equal to 0 or a total equal to 1 is
    rejected, since only the open simplex is admissible.
    """
    w = np.array(weights, dtype=float).reshape(-1)
    if w.size < 1:
        raise DimensionMismatch("a simplex point needs at least one weight")
    if not np.all(np.isfinite(w)):
        raise NonInterior(f"non-finite weight in {w}")
    if np.any(w <= 0.0) or np.any(w >= 1.0):
        raise NonInterior(f"weights must lie strictly in (0, 1): {w}")
    total = math.fsum(w)
    last = 1.0 - total
    if total >= 1.0 or last <= 0.0:
        raise NonInterior(f"weights sum to {total!r}, must be < 1")
    return SimplexPoint(_readonly(w), last)


def simplex_point_from_full(full) -> SimplexPoint:
    """Build a point from all ``d+1`` weights (the last one is dropped and recomputed)."""
    f = np.asarray(full, dtype=float).reshape(-1)
    if f.size < 2:
        raise DimensionMismatch("need at least two categories")
    return make_simplex_point(f[:-1])


@dataclass(frozen=True, eq=False)
class CountVector:
    counts: np.ndarray
    total: int
    last_count: int

    @property
    def d(self) -> int:
        return self.counts.shape[0]

    @property
    def full(self) -> np.ndarray:
        return np.append(self.counts, self.last_count)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CountVector):
            return NotImplemented
        return self.total == other.total and np.array_equal(self.counts, other.counts)

    def __hash__(self) -> int:
        return hash((self.total, self.counts.tobytes()))

    def __repr__(self) -> str:
        return f"CountVector({tuple(int(c) for c in self.counts)}, n={self.total})"


def make_count_vector(counts, total: int) -> CountVector:
    c = np.array(counts, dtype=np.int64).reshape(-1)
    if c.size < 1:
        raise DimensionMismatch("a count vector needs at least one coordinate")
    total = int(total)
    if total < 1:
        raise ValueError(f"total must be a positive integer, got {total}")
    if np.any(c < 0):
        raise ValueError(f"counts must be nonnegative: {c}")
    s = int(c.sum())
    if s > total:
        raise ValueError(f"counts sum to {s} > total {total}")
    return CountVector(_readonly(c), total, total - s)


def count_vector_from_full(full) -> CountVector:
    """Build from all ``d+1`` category counts; the total is their sum."""
    f = np.array(full, dtype=np.int64).reshape(-1)
    if f.size < 2:
        raise DimensionMismatch("need at least two categories")
    return make_count_vector(f[:-1], int(f.sum()))


@dataclass(frozen=True)
class ModelParams:
    n: int
    p: SimplexPoint
    tau: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if self.tau < self.p.d + 1:
            raise ValueError(f"tau={self.tau} must be >= d+1={self.p.d + 1}")

    @property
    def d(self) -> int:
        return self.p.d

    @property
    def in_regime(self) -> bool:
        return self.n >= self.tau**4


@dataclass(frozen=True, eq=False)
class Deviation:
    """Standardized deviations ``(k_i - n p_i) / sqrt(n)`` for all ``d+1`` categories."""

    values: np.ndarray = field(repr=True)

    @property
    def d(self) -> int:
        return self.values.shape[0] - 1

    @property
    def head(self) -> np.ndarray:
        """First ``d`` coordinates, the argument of the Gaussian density."""
        return self.values[:-1]


def _check_dims(k: CountVector, p: SimplexPoint) -> None:
    if k.d != p.d:
        raise DimensionMismatch(f"count vector has d={k.d}, simplex point has d={p.d}")


def deviation(k: CountVector, params: ModelParams) -> Deviation:
    _check_dims(k, params.p)
    if k.total != params.n:
        raise DimensionMismatch(f"count total {k.total} != n={params.n}")
    n = params.n
    head = (k.counts - n * params.p.weights) / math.sqrt(n)
    # the last coordinate is minus the sum, which makes the total exactly zero up to rounding
    return Deviation(_readonly(np.append(head, -head.sum())))


def in_p_tau(p: SimplexPoint, tau: float) -> bool:
    if tau <= 0:
        raise ValueError("tau must be positive")
    return float(np.max(1.0 / p.full)) <= tau


def in_bulk(k: CountVector, params: ModelParams) -> bool:
    if k.total != params.n:
        raise DimensionMismatch(f"count total {k.total} != n={params.n}")
    if np.any(k.counts <= 0) or k.last_count <= 0:
        return False
    n = params.n
    delta = deviation(k, params).values
    ratio = np.max(np.abs(delta / (math.sqrt(n) * params.p.full)))
    return bool(ratio <= params.tau * math.sqrt(math.log(n) / n))
