"""Covariance of the multinomial, its Gaussian analogue, and Pearson's statistic."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import CountVector, Deviation, SimplexPoint
from .errors import DimensionMismatch


@dataclass(frozen=True, eq=False)
class CovarianceBundle:
    sigma: np.ndarray
    sigma_inv: np.ndarray
    log_det: float

    @property
    def d(self) -> int:
        return self.sigma.shape[0]


def covariance_bundle(p: SimplexPoint) -> CovarianceBundle:
    """``diag(p) - p p^T``, its inverse and log-determinant, all in closed form."""
    w = p.weights
    sigma = np.diag(w) - np.outer(w, w)
    sigma_inv = np.diag(1.0 / w) + 1.0 / p.last_weight
    log_det = float(np.log(p.full).sum())
    return CovarianceBundle(sigma, sigma_inv, log_det)


def quadratic_form(y: np.ndarray, bundle: CovarianceBundle) -> float:
    y = np.asarray(y, dtype=float)
    return float(y @ bundle.sigma_inv @ y)


def normal_density(delta: Deviation | np.ndarray, bundle: CovarianceBundle) -> float:
    """Centered Gaussian density with covariance ``Sigma_p`` at ``delta``."""
    return math.exp(log_normal_density(delta, bundle))


def log_normal_density(delta: Deviation | np.ndarray, bundle: CovarianceBundle) -> float:
    y = delta.head if isinstance(delta, Deviation) else np.asarray(delta, dtype=float)[: bundle.d]
    if y.shape[0] != bundle.d:
        raise DimensionMismatch(f"deviation has {y.shape[0]} coordinates, covariance is {bundle.d}x{bundle.d}")
    d = bundle.d
    return -0.5 * quadratic_form(y, bundle) - 0.5 * (d * math.log(2 * math.pi) + bundle.log_det)


def pearson_statistic(k: CountVector, p: SimplexPoint) -> float:
    """``sum_i (k_i - n p_i)^2 / (n p_i)`` over all ``d+1`` categories."""
    if k.d != p.d:
        raise DimensionMismatch(f"count vector has d={k.d}, simplex point has d={p.d}")
    expected = k.total * p.full
    return float(np.sum((k.full - expected) ** 2 / expected))


def pearson_statistic_quadratic(k: CountVector, p: SimplexPoint) -> float:
    """Same statistic through the quadratic form ``delta^T Sigma_p^{-1} delta``."""
    if k.d != p.d:
        raise DimensionMismatch(f"count vector has d={k.d}, simplex point has d={p.d}")
    n = k.total
    y = (k.counts - n * p.weights) / math.sqrt(n)
    return quadratic_form(y, covariance_bundle(p))


def pearson_statistic_array(counts: np.ndarray, n: int, p: SimplexPoint) -> np.ndarray:
    """Vectorized statistic for an ``(m, d+1)`` array of full count vectors."""
    expected = n * p.full
    return np.sum((np.asarray(counts) - expected) ** 2 / expected, axis=1)
