"""Non-asymptotic multinomial/Gaussian approximation layer.

Contains the local log-ratio expansion with its explicit remainder bound,
closed-form evaluators for the total-variation, c.d.f.-gap and
confidence-set-transfer bounds, and the quantile-coupling construction.

The three bound evaluators share the regime ``tau >= d + 1`` and
``n >= tau**4``; by default they refuse to extrapolate outside it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .domain import CountVector, ModelParams, deviation, in_bulk, in_p_tau
from .errors import ConvergenceError, DomainError, OutOfBulk, OutOfPTau, RegimeViolation
from .gaussian import covariance_bundle, log_normal_density
from .multinomial import log_pmf, log_pmf_array
from .specfun import chi2_cdf, chi2_pdf

TV_CONSTANT = 8.03
CDF_GAP_CONSTANT = 1.26
EPSILON_CONSTANT = 194.96


@dataclass(frozen=True)
class ExpansionResult:
    exact_log_ratio: float
    main_term: float
    error_bound: float

    @property
    def remainder(self) -> float:
        return self.exact_log_ratio - self.main_term

    @property
    def holds(self) -> bool:
        return abs(self.remainder) <= self.error_bound


def _check_expansion_regime(k: CountVector, params: ModelParams) -> None:
    if params.n < params.tau**4:
        raise RegimeViolation(f"n={params.n} < tau^4={params.tau**4}")
    if not in_p_tau(params.p, params.tau):
        raise OutOfPTau(f"{params.p} has a weight below 1/tau={1 / params.tau}")
    if not in_bulk(k, params):
        raise OutOfBulk(f"{k} lies outside the bulk at n={params.n}, tau={params.tau}")


def local_expansion(k: CountVector, params: ModelParams) -> ExpansionResult:
    """Log of pmf over scaled Gaussian density, its cubic main term and remainder bound."""
    _check_expansion_regime(k, params)
    n = params.n
    d = params.d
    p = params.p.full
    delta = deviation(k, params)
    dv = delta.values
    bundle = covariance_bundle(params.p)
    log_gauss = -0.5 * d * math.log(n) + log_normal_density(delta, bundle)
    exact = log_pmf(k, params.p) - log_gauss
    main = float(np.sum(dv**3 / (6 * p**2) - dv / (2 * p))) / math.sqrt(n)
    bound = float(np.sum(21 * dv**4 / p**3 + 10 * dv**2 / p**2 + 2 * params.tau / 3)) / n
    return ExpansionResult(exact, main, bound)


@dataclass(frozen=True)
class ExpansionTable:
    """Row-wise expansion terms for a batch of count vectors."""

    bulk: np.ndarray
    exact_log_ratio: np.ndarray
    main_term: np.ndarray
    error_bound: np.ndarray

    @property
    def violations(self) -> int:
        held = np.abs(self.exact_log_ratio - self.main_term) <= self.error_bound
        return int(np.count_nonzero(self.bulk & ~held))


def local_expansion_array(counts: np.ndarray, params: ModelParams) -> ExpansionTable:
    """Vectorized :func:`local_expansion` over rows of full count vectors.

    Rows outside the bulk are flagged rather than rejected; their terms are NaN.
    """
    if params.n < params.tau**4:
        raise RegimeViolation(f"n={params.n} < tau^4={params.tau**4}")
    if not in_p_tau(params.p, params.tau):
        raise OutOfPTau(f"{params.p} has a weight below 1/tau={1 / params.tau}")
    counts = np.asarray(counts, dtype=np.int64)
    n = params.n
    p = params.p.full
    dv = (counts - n * p) / math.sqrt(n)
    ratio = np.max(np.abs(dv / (math.sqrt(n) * p)), axis=1)
    bulk = np.all(counts > 0, axis=1) & (ratio <= params.tau * math.sqrt(math.log(n) / n))
    rows = counts[bulk]
    y = dv[bulk, : params.d]
    bundle = covariance_bundle(params.p)
    quad = np.einsum("ij,jk,ik->i", y, bundle.sigma_inv, y)
    log_gauss = -0.5 * params.d * math.log(n) - 0.5 * quad - 0.5 * (params.d * math.log(2 * math.pi) + bundle.log_det)
    z = dv[bulk]
    exact = np.full(len(counts), np.nan)
    main = np.full(len(counts), np.nan)
    bound = np.full(len(counts), np.nan)
    exact[bulk] = log_pmf_array(rows, n, params.p) - log_gauss
    main[bulk] = np.sum(z**3 / (6 * p**2) - z / (2 * p), axis=1) / math.sqrt(n)
    bound[bulk] = np.sum(21 * z**4 / p**3 + 10 * z**2 / p**2 + 2 * params.tau / 3, axis=1) / n
    return ExpansionTable(bulk, exact, main, bound)


def transformed_local_expansion(
    k: CountVector, log_abs_jac_det: float, params: ModelParams
) -> ExpansionResult:
    """Expansion for ``y = h(k)`` given ``k = h^{-1}(y)`` and ``log|det Dh|`` at ``k``.

    Only the exact side moves; the main term and the bound depend on ``k`` alone.
    """
    base = local_expansion(k, params)
    return ExpansionResult(base.exact_log_ratio + log_abs_jac_det, base.main_term, base.error_bound)


def _check_bound_regime(n: float, d: int, tau: float, strict: bool) -> None:
    if d < 1:
        raise DomainError(f"d must be >= 1, got {d}")
    if tau < d + 1:
        raise RegimeViolation(f"tau={tau} < d+1={d + 1}")
    if strict and n < tau**4:
        raise RegimeViolation(f"n={n} < tau^4={tau**4}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")


def tv_bound(n: float, d: int, tau: float, *, strict: bool = True) -> float:
    """Upper bound on TV distance between the jittered multinomial and its Gaussian."""
    _check_bound_regime(n, d, tau, strict)
    return TV_CONSTANT * tau**1.5 * math.sqrt(d + 1) / math.sqrt(n)


def _log_shape(n: float, d: int, tau: float) -> float:
    return tau**3 * (d + 1) * math.log(n) ** 1.5 / math.sqrt(n)


def cdf_gap_bound(n: float, d: int, tau: float, *, strict: bool = True) -> float:
    """Upper bound on the sup-distance between the Pearson c.d.f. and chi-square(d).

    ``strict=False`` evaluates the formula below ``n = tau**4``, where it is
    no longer a proven bound.
    """
    _check_bound_regime(n, d, tau, strict)
    return CDF_GAP_CONSTANT * _log_shape(n, d, tau)


def epsilon_n(n: float, d: int, tau: float, *, strict: bool = True) -> float:
    """Confidence level lost when the exact set is replaced by its Gaussian superset."""
    _check_bound_regime(n, d, tau, strict)
    return EPSILON_CONSTANT * _log_shape(n, d, tau)


def coupling_c(ell: float, n: float, d: int, tau: float) -> float:
    if not ell > 0:
        raise DomainError(f"ell must be positive, got {ell}")
    return ell - CDF_GAP_CONSTANT * _log_shape(n, d, tau) / chi2_pdf(d, ell)


@dataclass(frozen=True)
class CouplingContext:
    n: float
    d: int
    tau: float
    quantile_fn: Optional[Callable[[float], float]] = None

    def __post_init__(self):
        if self.tau < self.d + 1:
            raise ValueError(f"tau={self.tau} must be >= d+1={self.d + 1}")

    @property
    def lower_limit(self) -> float:
        return 2 * (self.d / 2 - 1)

    def c(self, ell: float) -> float:
        return coupling_c(ell, self.n, self.d, self.tau)

    def xi(self, y_stat: float) -> float:
        """Quantile-transformed statistic ``F*(G(y))``; needs ``quantile_fn``."""
        if self.quantile_fn is None:
            raise ValueError("no quantile function attached to this context")
        g = chi2_cdf(self.d, y_stat)
        return self.quantile_fn(g) if g > 0 else self.quantile_fn(np.nextafter(0.0, 1.0))


@dataclass(frozen=True)
class CouplingBound:
    """Outcome of :func:`coupling_upper`.

    ``feasible`` is False when ``y_stat`` lies above the supremum of ``c``
    (the event on which the coupling inequality applies is empty there);
    ``xi_bound`` and ``L`` are then None.
    """

    feasible: bool
    xi_bound: Optional[float]
    L: Optional[float]
    sup_c: float
    sup_at: float


_FD_STEP = 1e-4


def _c_slope(ctx: CouplingContext, ell: float) -> float:
    return (ctx.c(ell + _FD_STEP) - ctx.c(ell)) / _FD_STEP


def _argmax_c(ctx: CouplingContext, lo: float, hi: float) -> float:
    # c is concave on the region where the chi-square density decreases: bisect on the slope sign
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _c_slope(ctx, mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def _sup_c(ctx: CouplingContext, start: float) -> tuple[float, float]:
    lo = start
    if _c_slope(ctx, lo) <= 0:
        return ctx.c(lo), lo
    width = 1.0
    for _ in range(200):
        hi = lo + width
        if _c_slope(ctx, hi) <= 0:
            at = _argmax_c(ctx, lo, hi)
            return ctx.c(at), at
        lo, width = hi, 2 * width
    raise ConvergenceError("could not locate the supremum of c")


def coupling_upper(y_stat: float, ctx: CouplingContext, *, tol: float = 1e-12) -> CouplingBound:
    """Upper bound on the quantile-coupled statistic given a Gaussian statistic value.

    Solves ``y_stat = c(L)`` on the increasing branch of ``c`` by bisection
    and adds the correction ``C / (G'(L) sqrt(n))`` to ``y_stat``.
    """
    if y_stat < ctx.lower_limit:
        raise DomainError(f"y_stat={y_stat} below the lower limit {ctx.lower_limit}")
    start = max(ctx.lower_limit, 1e-8)
    sup_val, sup_at = _sup_c(ctx, start)
    if sup_val < y_stat:
        return CouplingBound(False, None, None, sup_val, sup_at)

    lo = max(y_stat, start)
    width = 1.0
    hi = min(lo + width, sup_at)
    for _ in range(200):
        if ctx.c(hi) >= y_stat or hi >= sup_at:
            break
        width *= 2
        hi = min(lo + width, sup_at)
    if ctx.c(lo) >= y_stat:
        root = lo
    else:
        for _ in range(300):
            mid = 0.5 * (lo + hi)
            if ctx.c(mid) < y_stat:
                lo = mid
            else:
                hi = mid
            if hi - lo <= tol * max(1.0, hi):
                break
        else:
            raise ConvergenceError("bisection for L did not converge")
        root = 0.5 * (lo + hi)
    correction = CDF_GAP_CONSTANT * _log_shape(ctx.n, ctx.d, ctx.tau) / chi2_pdf(ctx.d, root)
    return CouplingBound(True, y_stat + correction, root, sup_val, sup_at)
