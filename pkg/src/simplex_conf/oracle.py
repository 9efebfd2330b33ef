"""Brute-force and quadrature oracles.

* exact distribution of Pearson's statistic by enumerating the support,
* its generalized inverse (quantile function),
* total-variation distance between the uniformly jittered multinomial and
  the Gaussian with matching mean and covariance,
* the largest gap between the exact Pearson c.d.f. and chi-square(d) on a grid.

All reductions run in lattice (lexicographic) order so results do not
depend on how the work is chunked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .domain import SimplexPoint
from .errors import DomainError
from .gaussian import covariance_bundle, pearson_statistic_array
from .multinomial import ENUMERATION_CAP, log_pmf_array, support_array
from .specfun import chi2_cdf

MERGE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class StepCdf:
    """Right-continuous step c.d.f. with jumps at ``values``."""

    values: np.ndarray
    masses: np.ndarray
    cumulative: np.ndarray

    def __call__(self, ell: float) -> float:
        """``F(ell)`` = total mass of values ``<= ell``."""
        i = np.searchsorted(self.values, ell, side="right")
        return 0.0 if i == 0 else float(self.cumulative[i - 1])

    def __len__(self) -> int:
        return self.values.shape[0]


def step_cdf_from_samples(values: np.ndarray, weights: np.ndarray, merge_tol: float = MERGE_TOL) -> StepCdf:
    """Aggregate weighted atoms, merging values within ``merge_tol`` (relative above 1)."""
    order = np.argsort(values, kind="stable")
    v = np.asarray(values, dtype=float)[order]
    w = np.asarray(weights, dtype=float)[order]
    if v.size == 0:
        raise ValueError("no atoms")
    # start a new group whenever the gap to the previous atom exceeds the tolerance
    gaps = np.diff(v)
    new_group = np.concatenate([[True], gaps > merge_tol * np.maximum(1.0, np.abs(v[1:]))])
    group_id = np.cumsum(new_group) - 1
    masses = np.bincount(group_id, weights=w)
    starts = np.flatnonzero(new_group)
    vals = v[starts]
    cum = np.cumsum(masses)
    total = cum[-1]
    if abs(total - 1.0) > 1e-10:
        raise ValueError(f"total mass {total} differs from 1 by more than 1e-10")
    cum[-1] = 1.0
    return StepCdf(vals, masses, np.minimum(cum, 1.0))


def exact_pearson_cdf(p: SimplexPoint, n: int, cap: int = ENUMERATION_CAP) -> StepCdf:
    """Exact law of Pearson's statistic under Multinomial(n, p), by enumeration."""
    support = support_array(n, p.d, cap)
    stats = pearson_statistic_array(support, n, p)
    probs = np.exp(log_pmf_array(support, n, p))
    return step_cdf_from_samples(stats, probs)


def quantile(cdf: StepCdf, q: float) -> float:
    """Generalized inverse ``inf{x : F(x) >= q}`` for ``q`` in ``(0, 1]``."""
    if not 0.0 < q <= 1.0:
        raise DomainError(f"quantile level must lie in (0, 1], got {q}")
    i = int(np.searchsorted(cdf.cumulative, q, side="left"))
    return float(cdf.values[min(i, len(cdf) - 1)])


def default_ell_grid(d: int, size: int = 60) -> np.ndarray:
    return np.geomspace(0.05, 2.0 * (d + 6), size)


def sup_cdf_gap(p: SimplexPoint, n: int, ell_grid: Optional[Sequence[float]] = None,
                cap: int = ENUMERATION_CAP) -> float:
    """``max_ell |F_exact(ell) - chi2_cdf(d, ell)|`` over the grid."""
    grid = default_ell_grid(p.d) if ell_grid is None else np.asarray(ell_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("ell_grid must be nonempty")
    cdf = exact_pearson_cdf(p, n, cap)
    return max(abs(cdf(ell) - chi2_cdf(p.d, ell)) for ell in grid)


@dataclass(frozen=True)
class QuadratureConfig:
    """Per-cube tensor Gauss-Legendre settings.

    ``subdivisions`` is the depth of adaptive bisection applied to cells in
    which the integrand changes sign.
    """

    nodes_per_axis: int = 8
    subdivisions: int = 2
    tail_radius_sigmas: float = 10.0

    def __post_init__(self):
        if self.nodes_per_axis < 1 or self.subdivisions < 0 or not self.tail_radius_sigmas > 0:
            raise ValueError("quadrature settings must be positive")


class _Gaussian:
    def __init__(self, p: SimplexPoint, n: int, tail_radius: float = 10.0):
        self.tail_radius = tail_radius
        bundle = covariance_bundle(p)
        self.mean = n * p.weights
        self.prec = bundle.sigma_inv / n
        self.log_norm = -0.5 * (p.d * math.log(2 * math.pi) + p.d * math.log(n) + bundle.log_det)

    def mahalanobis(self, x: np.ndarray) -> np.ndarray:
        y = x - self.mean
        return np.sqrt(np.einsum("...i,ij,...j->...", y, self.prec, y))

    def density(self, x: np.ndarray) -> np.ndarray:
        y = x - self.mean
        q = np.einsum("...i,ij,...j->...", y, self.prec, y)
        return np.exp(self.log_norm - 0.5 * q)


def _tensor_nodes(t: np.ndarray, w: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    grids = np.meshgrid(*([t] * d), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    wg = np.meshgrid(*([w] * d), indexing="ij")
    wts = np.prod(np.stack([g.ravel() for g in wg], axis=-1), axis=-1)
    return pts, wts


def _corners(d: int) -> np.ndarray:
    grids = np.meshgrid(*([np.array([-1.0, 1.0])] * d), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def _integrate_cells(centers, half, level_pmf, gauss, pts, wts, corners, depth):
    """Return (sum |P - phi|, sum phi) over cells of half-width ``half``, refining sign changes."""
    d = centers.shape[1]
    x = centers[:, None, :] + half * pts[None, :, :]
    phi = gauss.density(x)
    scale = half**d
    diff = level_pmf[:, None] - phi
    gauss_int = scale * (phi @ wts)
    if depth == 0:
        abs_int = scale * (np.abs(diff) @ wts)
        return float(abs_int.sum()), float(gauss_int.sum())
    xc = centers[:, None, :] + half * corners[None, :, :]
    probe = np.concatenate([diff, level_pmf[:, None] - gauss.density(xc)], axis=1)
    mixed = (probe.min(axis=1) < 0) & (probe.max(axis=1) > 0)
    # far tails carry negligible mass on both sides: no refinement there
    mixed &= gauss.mahalanobis(centers) <= gauss.tail_radius
    smooth = ~mixed
    abs_total = float(scale * (np.abs(diff[smooth]) @ wts).sum())
    gauss_total = float(gauss_int[smooth].sum())
    if np.any(mixed):
        child_half = half / 2
        offsets = child_half * corners
        kids = (centers[mixed][:, None, :] + offsets[None, :, :]).reshape(-1, d)
        kid_pmf = np.repeat(level_pmf[mixed], corners.shape[0])
        a, g = _integrate_cells(kids, child_half, kid_pmf, gauss, pts, wts, corners, depth - 1)
        abs_total += a
        gauss_total += g
    return abs_total, gauss_total


def tv_estimate(p: SimplexPoint, n: int, cfg: QuadratureConfig = QuadratureConfig(),
                *, mc_points: int = 10**7, seed: int = 0, cap: int = ENUMERATION_CAP) -> float:
    """Total variation between ``K + U`` (``U`` uniform on the unit cube) and ``N(np, n Sigma_p)``.

    Deterministic quadrature for ``d <= 2``; Monte Carlo under the Gaussian
    for ``d == 3``.
    """
    if p.d > 3:
        raise DomainError("total-variation estimation supports d <= 3 only")
    support = support_array(n, p.d, cap)
    pmf = np.exp(log_pmf_array(support, n, p))
    gauss = _Gaussian(p, n, cfg.tail_radius_sigmas)
    if p.d == 3:
        return _tv_monte_carlo(support, pmf, gauss, n, mc_points, seed)
    t, w = np.polynomial.legendre.leggauss(cfg.nodes_per_axis)
    pts, wts = _tensor_nodes(t, w, p.d)
    centers = support[:, :-1].astype(float)
    abs_int, gauss_int = _integrate_cells(
        centers, 0.5, pmf, gauss, pts, wts, _corners(p.d), cfg.subdivisions
    )
    outside = max(0.0, 1.0 - gauss_int)
    return min(1.0, 0.5 * (abs_int + outside))


def _tv_monte_carlo(support, pmf, gauss, n, points, seed, chunk=10**6):
    d = support.shape[1] - 1
    # dense lookup table for the pmf indexed by the first d counts
    table = np.zeros((n + 1,) * d)
    table[tuple(support[:, :-1].T)] = pmf
    rng = np.random.default_rng(seed)
    cov = np.linalg.inv(gauss.prec)
    chol = np.linalg.cholesky(cov)
    total = 0.0
    done = 0
    while done < points:
        m = min(chunk, points - done)
        y = gauss.mean + rng.standard_normal((m, d)) @ chol.T
        k = np.rint(y).astype(np.int64)
        ok = np.all(k >= 0, axis=1) & (k.sum(axis=1) <= n)
        ptilde = np.zeros(m)
        ptilde[ok] = table[tuple(k[ok].T)]
        ratio = ptilde / gauss.density(y)
        total += float(np.maximum(0.0, 1.0 - ratio).sum())
        done += m
    return total / points
