"""Seeded Monte Carlo coverage study of the confidence bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .confopt import ConfidenceSpec, Objective, confidence_bounds, eval_objective
from .domain import SimplexPoint
from .errors import ZeroCount
from .multinomial import sample

CSV_HEADER = ("n", "lambda0", "mean_lower", "mean_upper", "empirical_level", "trials", "resampled")

# guard against p0 so close to the boundary that positive counts are practically unreachable
MAX_RESAMPLES = 10_000


@dataclass(frozen=True)
class CoverageRow:
    n: int
    lambda0: float
    mean_lower: float
    mean_upper: float
    empirical_level: float
    trials: int
    resampled: int = 0

    @property
    def mean_width(self) -> float:
        return self.mean_upper - self.mean_lower

    def as_tuple(self) -> tuple:
        return (self.n, self.lambda0, self.mean_lower, self.mean_upper,
                self.empirical_level, self.trials, self.resampled)


def trial_stream(seed: int, n: int, trial: int) -> np.random.Generator:
    """Independent generator for one (n, trial) cell, fixed by the seed."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(n, trial)))


def _positive_sample(p0: SimplexPoint, n: int, rng: np.random.Generator):
    for extra in range(MAX_RESAMPLES):
        k = sample(p0, n, rng)
        if np.all(k.full > 0):
            return k, extra
    raise ZeroCount(f"no sample with all counts positive after {MAX_RESAMPLES} draws at n={n}")


def run_coverage(p0: SimplexPoint, obj: Objective, n_grid: Sequence[int], trials: int, seed: int,
                 spec: ConfidenceSpec = ConfidenceSpec(),
                 progress: Optional[Callable[[int, int], None]] = None) -> list[CoverageRow]:
    """One :class:`CoverageRow` per ``n``; trials run in index order."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("n_grid must be strictly increasing")
    lambda0 = eval_objective(obj, p0).value
    rows = []
    for n in grid:
        lower = np.empty(trials)
        upper = np.empty(trials)
        resampled = 0
        for t in range(trials):
            k, extra = _positive_sample(p0, n, trial_stream(seed, n, t))
            resampled += extra
            res = confidence_bounds(k, obj, spec)
            lower[t], upper[t] = res.lambda_lower, res.lambda_upper
            if progress is not None:
                progress(n, t)
        missed = (lambda0 < lower) | (lambda0 > upper)
        rows.append(CoverageRow(n, lambda0, float(math.fsum(lower) / trials),
                                float(math.fsum(upper) / trials), float(missed.mean()),
                                trials, resampled))
    return rows


def format_csv(rows: Sequence[CoverageRow]) -> str:
    lines = [",".join(CSV_HEADER)]
    for r in rows:
        lines.append(
            f"{r.n},{r.lambda0!r},{r.mean_lower!r},{r.mean_upper!r},{r.empirical_level!r},{r.trials},{r.resampled}"
        )
    return "\n".join(lines) + "\n"
