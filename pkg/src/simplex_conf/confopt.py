"""Confidence bounds for strictly convex functions of multinomial weights.

The exact confidence set (pmf-ordering inversion) is replaced by its
Gaussian superset

    {p in open simplex : chi2_cdf(d, pearson(observed, p)) <= 1 - alpha'}
  = {p : g(p) <= L},   L = chi2_quantile(d, 1 - alpha'),

where ``g`` is Pearson's statistic of the observed counts against ``p``.
Bounds are the minimum and maximum of the objective over that set:

* minimum: log-barrier interior-point method started at the empirical
  frequencies (``g = 0`` there);
* maximum: attained on the boundary ``g = L``; each direction ``u`` from
  the empirical point hits the boundary exactly once, and the objective is
  maximized over directions by a batched multi-start projected ascent
  followed by a Newton solve of the KKT system;
* ``d = 1``: the objective is optimized over the exact equal-tailed
  binomial interval instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .approx import epsilon_n
from .domain import CountVector, SimplexPoint, make_simplex_point
from .errors import ConvergenceError, DimensionMismatch, DomainError, ZeroCount
from .multinomial import ENUMERATION_CAP, support_array
from .specfun import chi2_cdf, chi2_quantile, log_factorial_table
from .gaussian import pearson_statistic

# ---------------------------------------------------------------------------
# specs and objectives
# ---------------------------------------------------------------------------

PRACTICAL = "practical"
THEORETICAL = "theoretical"


@dataclass(frozen=True)
class ConfidenceSpec:
    alpha: float = 0.05
    epsilon_mode: str = PRACTICAL
    tau: Optional[float] = None  # defaults to d + 1 when needed

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.epsilon_mode not in (PRACTICAL, THEORETICAL):
            raise ValueError(f"epsilon_mode must be {PRACTICAL!r} or {THEORETICAL!r}")

    def epsilon(self, n: int, d: int) -> float:
        if self.epsilon_mode == PRACTICAL:
            return 0.0
        tau = self.tau if self.tau is not None else d + 1
        # below n = tau^4 the constant is unproven but the value is already far above any alpha
        return epsilon_n(n, d, tau, strict=False)

    def alpha_prime(self, n: int, d: int) -> float:
        return self.alpha - self.epsilon(n, d)


NEG_ENTROPY = "neg_entropy"
QUADRATIC = "quadratic"
CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class Objective:
    """A strictly convex function of the first ``d`` weights.

    ``kind`` is ``"neg_entropy"`` (sum of ``p_i log p_i`` over all ``d+1``
    weights), ``"quadratic"`` (``x^T A x`` on the first ``d`` weights) or
    ``"custom"``, in which case ``fn``, ``grad`` and ``hess`` take the
    length-``d`` weight vector.
    """

    kind: str
    values: Optional[np.ndarray] = None
    A: Optional[np.ndarray] = None
    fn: Optional[Callable] = None
    grad: Optional[Callable] = None
    hess: Optional[Callable] = None

    def __post_init__(self):
        if self.kind == QUADRATIC:
            if self.A is None:
                raise ValueError("quadratic objective needs a matrix A")
            A = np.array(self.A, dtype=float)
            if A.ndim != 2 or A.shape[0] != A.shape[1]:
                raise DimensionMismatch(f"A must be square, got shape {A.shape}")
            if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
                raise ValueError("A must be symmetric")
            try:
                np.linalg.cholesky(A)
            except np.linalg.LinAlgError as exc:
                raise ValueError("A must be positive definite") from exc
            A.setflags(write=False)
            object.__setattr__(self, "A", A)
        elif self.kind == CUSTOM:
            if self.fn is None or self.grad is None or self.hess is None:
                raise ValueError("custom objective needs fn, grad and hess")
        elif self.kind != NEG_ENTROPY:
            raise ValueError(f"unknown objective kind {self.kind!r}")
        if self.values is not None:
            v = np.array(self.values, dtype=float)
            v.setflags(write=False)
            object.__setattr__(self, "values", v)


def neg_entropy() -> Objective:
    return Objective(NEG_ENTROPY)


def quadratic(A, values=None) -> Objective:
    return Objective(QUADRATIC, values=values, A=A)


def fig2_matrix(values) -> np.ndarray:
    """Matrix used for the quadratic-form example with four categories."""
    v = np.asarray(values, dtype=float)
    return np.array([
        [v[0] + 1, 0.5, 0.25],
        [0.5, v[1] + 1, 0.75],
        [0.25, 0.75, v[2] + 1],
    ])


@dataclass(frozen=True)
class ObjectiveEval:
    value: float
    gradient: np.ndarray
    hessian: np.ndarray


def _full(x: np.ndarray) -> np.ndarray:
    return np.concatenate([x, 1.0 - x.sum(axis=-1, keepdims=True)], axis=-1)


def _f_value(obj: Objective, X: np.ndarray) -> np.ndarray:
    """Objective on a batch ``(m, d)`` of interior points."""
    if obj.kind == NEG_ENTROPY:
        F = _full(X)
        return np.sum(F * np.log(F), axis=-1)
    if obj.kind == QUADRATIC:
        return np.einsum("...i,ij,...j->...", X, obj.A, X)
    return np.array([obj.fn(x) for x in np.atleast_2d(X)]).reshape(X.shape[:-1])


def _f_grad(obj: Objective, X: np.ndarray) -> np.ndarray:
    if obj.kind == NEG_ENTROPY:
        last = 1.0 - X.sum(axis=-1, keepdims=True)
        return np.log(X) - np.log(last)
    if obj.kind == QUADRATIC:
        return 2.0 * X @ obj.A
    return np.array([obj.grad(x) for x in np.atleast_2d(X)]).reshape(X.shape)


def _f_hess(obj: Objective, x: np.ndarray) -> np.ndarray:
    if obj.kind == NEG_ENTROPY:
        return np.diag(1.0 / x) + 1.0 / (1.0 - x.sum())
    if obj.kind == QUADRATIC:
        return 2.0 * obj.A
    return np.asarray(obj.hess(x), dtype=float)


def eval_objective(obj: Objective, p: SimplexPoint) -> ObjectiveEval:
    x = p.weights
    if obj.kind == QUADRATIC and obj.A.shape[0] != p.d:
        raise DimensionMismatch(f"A is {obj.A.shape[0]}x{obj.A.shape[0]}, point has d={p.d}")
    return ObjectiveEval(float(_f_value(obj, x)), _f_grad(obj, x), _f_hess(obj, x))


def _f_at_vertices(obj: Objective, d: int) -> float:
    """Supremum of a convex objective over the open simplex (attained in the limit at a vertex)."""
    if obj.kind == NEG_ENTROPY:
        return 0.0
    vertices = np.vstack([np.zeros(d), np.eye(d)])
    if obj.kind == QUADRATIC:
        return float(np.max(_f_value(obj, vertices)))
    return float(max(obj.fn(v) for v in vertices))


# ---------------------------------------------------------------------------
# the Pearson constraint g(x) = n sum (phat_i - x_i)^2 / x_i
# ---------------------------------------------------------------------------


class PearsonConstraint:
    """Pearson statistic of fixed observed counts as a function of the first ``d`` weights."""

    def __init__(self, observed: CountVector):
        self.n = observed.total
        self.d = observed.d
        self.phat_full = observed.full / observed.total
        self.phat = self.phat_full[:-1]
        self.phat_sq = self.phat_full**2

    def value(self, X: np.ndarray) -> np.ndarray:
        F = _full(X)
        return self.n * np.sum((self.phat_full - F) ** 2 / F, axis=-1)

    def grad(self, X: np.ndarray) -> np.ndarray:
        F = _full(X)
        r = self.phat_sq / F**2
        return self.n * (r[..., -1:] - r[..., :-1])

    def hess(self, x: np.ndarray) -> np.ndarray:
        f = _full(x)
        c = 2.0 * self.n * self.phat_sq / f**3
        return np.diag(c[:-1]) + c[-1]

    def ray_root(self, U: np.ndarray, level: float, t0: Optional[np.ndarray] = None) -> np.ndarray:
        """Distance ``t`` along each row of ``U`` (shape ``(m, d)``) at which ``g`` reaches ``level``.

        Along a ray ``g(phat + t u) = n t^2 sum_i U_i^2 / (phat_i + t U_i)``
        with ``U`` the full direction; it increases from 0 to infinity on
        ``[0, t_max)``, so the crossing is unique.  Safeguarded Newton with a
        shrinking bracket, vectorized over rows; ``t0`` is an optional warm start.
        """
        U = np.atleast_2d(U)
        Uf = np.concatenate([U, -U.sum(axis=1, keepdims=True)], axis=1)
        target = level / self.n
        U2 = Uf**2
        with np.errstate(divide="ignore", invalid="ignore"):
            lim = np.where(Uf < 0, -self.phat_full / Uf, np.inf)
        t_max = lim.min(axis=1)
        curv = np.sum(U2 / self.phat_full, axis=1)
        lo = np.zeros(U.shape[0])
        hi = t_max.copy()
        guess = np.sqrt(target / curv) if t0 is None else t0
        t = np.minimum(guess, 0.5 * t_max)
        for _ in range(100):
            den = self.phat_full + t[:, None] * Uf
            h = t**2 * np.sum(U2 / den, axis=1)
            resid = h - target
            done = np.abs(resid) <= 1e-14 * target
            if done.all():
                return t
            above = resid > 0
            hi = np.where(above, t, hi)
            lo = np.where(above, lo, t)
            dh = t * np.sum(U2 * (2 * self.phat_full + t[:, None] * Uf) / den**2, axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = t - resid / dh
            bad = ~np.isfinite(step) | (step <= lo) | (step >= hi)
            mid = np.where(np.isfinite(hi), 0.5 * (lo + hi), 2 * t)
            t_new = np.where(bad, mid, step)
            t = np.where(done, t, t_new)
            if np.all(np.abs(hi - lo) <= 1e-16 * np.maximum(hi, 1e-300)):
                return t
        raise ConvergenceError("ray/boundary intersection did not converge")


# ---------------------------------------------------------------------------
# membership
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PseudoCounts:
    """Real-valued cell counts, e.g. after adding 1/2 to every cell.

    Accepted wherever the Gaussian superset is used; the exact binomial
    path needs integer counts and is bypassed.
    """

    full: np.ndarray

    def __post_init__(self):
        f = np.array(self.full, dtype=float).reshape(-1)
        if f.size < 2:
            raise DimensionMismatch("need at least two categories")
        if not np.all(np.isfinite(f)) or np.any(f < 0):
            raise ValueError(f"pseudo-counts must be finite and nonnegative: {f}")
        f.setflags(write=False)
        object.__setattr__(self, "full", f)

    @property
    def d(self) -> int:
        return self.full.shape[0] - 1

    @property
    def total(self) -> float:
        return float(math.fsum(self.full))

    @property
    def counts(self) -> np.ndarray:
        return self.full[:-1]


def smooth_half(observed: CountVector) -> PseudoCounts:
    """Add 1/2 to every cell (a convenience outside the exact theory)."""
    return PseudoCounts(observed.full + 0.5)


def _require_positive(observed: CountVector) -> None:
    if np.any(observed.full <= 0):
        raise ZeroCount(f"every category needs a positive count, got {tuple(observed.full)}")


def exact_set_mass(p: SimplexPoint, observed: CountVector, cap: int = ENUMERATION_CAP) -> float:
    """Mass of ``{k : P(k) >= P(observed)}`` under Multinomial(n, p)."""
    return float(exact_set_masses(p.weights[None, :], observed, cap)[0])


# relative tolerance (in log space) used to count pmf ties on the >= side
_TIE_TOL = 1e-9


def exact_set_masses(X: np.ndarray, observed: CountVector, cap: int = ENUMERATION_CAP) -> np.ndarray:
    """Vectorized :func:`exact_set_mass` over rows of ``X`` (first ``d`` weights)."""
    n, d = observed.total, observed.d
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != d:
        raise DimensionMismatch(f"points have d={X.shape[1]}, counts have d={d}")
    support = support_array(n, d, cap)
    lf = log_factorial_table(n)
    base = lf[n] - lf[support].sum(axis=1)
    obs = observed.full
    obs_base = lf[n] - lf[obs].sum()
    out = np.empty(X.shape[0])
    for i, x in enumerate(X):
        logp = np.log(_full(x))
        lp = base + support @ logp
        lobs = obs_base + obs @ logp
        keep = lp >= lobs - _TIE_TOL * max(1.0, abs(lobs))
        out[i] = np.exp(lp[keep]).sum()
    return out


def exact_set_member(p: SimplexPoint, observed: CountVector, alpha: float,
                     cap: int = ENUMERATION_CAP) -> bool:
    """Is ``p`` in the exact pmf-ordering confidence set for the observed counts?"""
    _require_positive(observed)
    if observed.d != p.d:
        raise DimensionMismatch(f"counts have d={observed.d}, point has d={p.d}")
    return exact_set_mass(p, observed, cap) <= 1.0 - alpha


@dataclass(frozen=True)
class Membership:
    member: bool
    vacuous: bool = False

    def __bool__(self) -> bool:
        return self.member


def gaussian_set_member(p: SimplexPoint, observed: CountVector, alpha_prime: float) -> Membership:
    """Membership in the Gaussian superset at level ``alpha_prime``.

    A level ``<= 0`` makes the set the whole open simplex (``vacuous``).
    """
    if alpha_prime >= 1.0:
        raise DomainError(f"alpha' must be < 1, got {alpha_prime}")
    if alpha_prime <= 0.0:
        return Membership(True, vacuous=True)
    stat = pearson_statistic(observed, p)
    return Membership(chi2_cdf(p.d, stat) <= 1.0 - alpha_prime)


def threshold_L(d: int, alpha_prime: float) -> float:
    """Pearson-statistic threshold bounding the Gaussian superset."""
    if not 0.0 < alpha_prime < 1.0:
        raise DomainError(f"alpha' must lie in (0, 1), got {alpha_prime}")
    return chi2_quantile(d, 1.0 - alpha_prime)


# ---------------------------------------------------------------------------
# containment report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContainmentReport:
    n: int
    d: int
    alpha: float
    tau: float
    epsilon_theoretical: float
    vacuous: bool
    contained: bool
    min_empirical_epsilon: float
    level_margin: float
    grid_points: int
    exact_members: int


def interior_grid(d: int, resolution: int) -> np.ndarray:
    """Points ``i / (resolution + 1)`` strictly inside the simplex (``d <= 2``)."""
    if d == 1:
        return (np.arange(1, resolution + 1) / (resolution + 1))[:, None]
    if d == 2:
        m = resolution + 1
        i, j = np.meshgrid(np.arange(1, m), np.arange(1, m), indexing="ij")
        keep = i + j < m
        return np.column_stack([i[keep], j[keep]]) / m
    raise DomainError("grid scans support d <= 2 only")


def containment_check(observed: CountVector, alpha: float, grid_resolution: int = 999,
                      tau: Optional[float] = None, cap: int = ENUMERATION_CAP) -> ContainmentReport:
    """Scan a grid and compare the exact set with the Gaussian superset.

    ``min_empirical_epsilon`` is the smallest ``eps >= 0`` for which every
    exact member on the grid belongs to the superset at level
    ``alpha - eps``.  ``level_margin`` is the same quantity without the
    clamp at zero; it is negative when containment holds with room to spare.
    """
    _require_positive(observed)
    n, d = observed.total, observed.d
    tau = d + 1 if tau is None else tau
    eps_theory = epsilon_n(n, d, tau, strict=False)
    X = interior_grid(d, grid_resolution)
    exact = exact_set_masses(X, observed, cap) <= 1.0 - alpha
    g = PearsonConstraint(observed).value(X)
    gcdf = np.array([chi2_cdf(d, s) for s in g[exact]])
    need = float(np.max(gcdf) - (1.0 - alpha)) if gcdf.size else -math.inf
    vacuous = alpha - eps_theory <= 0.0
    contained = vacuous or bool(np.all(gcdf <= 1.0 - (alpha - eps_theory)))
    return ContainmentReport(n, d, alpha, tau, eps_theory, vacuous, contained, max(0.0, need), need,
                             X.shape[0], int(exact.sum()))


# ---------------------------------------------------------------------------
# optimization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OptimumResult:
    value: float
    point: Optional[SimplexPoint]
    iterations: int = 0
    kkt_residual: float = 0.0
    multiplier: float = 0.0
    boundary_residual: float = 0.0
    vacuous: bool = False
    multiple_optima: bool = False


_ARMIJO = 1e-4
_BACKTRACK = 0.5
_NEWTON_TOL = 1e-10
_MU_START = 1.0
_MU_FACTOR = 0.2
_MU_FLOOR = 1e-9
_GAP_TOL = 1e-8


def _prepare(obj: Objective, observed: CountVector, spec: ConfidenceSpec):
    _require_positive(observed)
    if obj.kind == QUADRATIC and obj.A.shape[0] != observed.d:
        raise DimensionMismatch(f"A is {obj.A.shape[0]}x{obj.A.shape[0]}, counts have d={observed.d}")
    alpha_prime = spec.alpha_prime(observed.total, observed.d)
    if alpha_prime <= 0.0:
        return None, alpha_prime
    return threshold_L(observed.d, alpha_prime), alpha_prime


def _barrier_minimize(obj: Objective, con: Optional[PearsonConstraint], L: float, x0: np.ndarray):
    """Log-barrier path following; ``con=None`` drops the Pearson constraint."""
    x = x0.copy()
    d = x.size
    mu = _MU_START
    m = d + 1 + (con is not None)
    iters = 0

    def phi(z: np.ndarray) -> float:
        f = _full(z)
        if np.any(f <= 0):
            return math.inf
        val = float(_f_value(obj, z)) - mu * float(np.log(f).sum())
        if con is not None:
            slack = L - float(con.value(z))
            if not slack > 0:
                return math.inf
            val -= mu * math.log(slack)
        return val

    while True:
        for _ in range(200):
            iters += 1
            f = _full(x)
            inv = 1.0 / f
            grad = _f_grad(obj, x) - mu * (inv[:-1] - inv[-1])
            hess = _f_hess(obj, x) + mu * (np.diag(inv[:-1] ** 2) + inv[-1] ** 2)
            if con is not None:
                slack = L - float(con.value(x))
                gg = con.grad(x)
                grad = grad + mu * gg / slack
                hess = hess + mu * (con.hess(x) / slack + np.outer(gg, gg) / slack**2)
            step = -np.linalg.solve(hess, grad)
            dec = -float(grad @ step)
            if dec / 2 <= _NEWTON_TOL:
                break
            cur = phi(x)
            s = 1.0
            while True:
                cand = x + s * step
                if phi(cand) <= cur - _ARMIJO * s * dec:
                    break
                s *= _BACKTRACK
                if s < 1e-20:
                    break
            if s < 1e-20:
                break
            x = cand
        else:
            raise ConvergenceError("barrier Newton iterations did not converge")
        if m * mu < _GAP_TOL or mu <= _MU_FLOOR:
            break
        mu = max(mu * _MU_FACTOR, _MU_FLOOR)
    return x, mu, iters


def minimize_over_set(obj: Objective, observed: CountVector, spec: ConfidenceSpec) -> OptimumResult:
    """Minimum of ``obj`` over the Gaussian superset (interior-point method)."""
    L, _ = _prepare(obj, observed, spec)
    con = PearsonConstraint(observed)
    if L is None:
        x, mu, iters = _barrier_minimize(obj, None, 0.0, np.full(observed.d, 1.0 / (observed.d + 1)))
        return OptimumResult(float(_f_value(obj, x)), make_simplex_point(x), iters, vacuous=True)
    x, mu, iters = _barrier_minimize(obj, con, L, con.phat.copy())
    slack = L - float(con.value(x))
    lam = mu / slack
    fx = float(_f_value(obj, x))
    if slack < 1e-4 * max(1.0, L):
        # active constraint: finish on the KKT system, where the barrier is badly conditioned
        polished = _kkt_polish(obj, con, L, x)
        if polished is not None and np.linalg.norm(polished - x) < 1e-3:
            gg = con.grad(polished)
            lam_p = -float(_f_grad(obj, polished) @ gg / (gg @ gg))
            fp = float(_f_value(obj, polished))
            if lam_p >= 0 and fp <= fx + 1e-9:
                x, lam, fx = polished, lam_p, fp
                slack = L - float(con.value(x))
    resid = float(np.linalg.norm(_f_grad(obj, x) + lam * con.grad(x)))
    return OptimumResult(fx, make_simplex_point(x), iters, resid, lam, boundary_residual=abs(slack))


def _start_directions(d: int, count: int) -> np.ndarray:
    axes = np.vstack([np.eye(d), -np.eye(d)])
    extra = max(0, count - axes.shape[0])
    if d == 1 or extra == 0:
        return axes
    if d == 2:
        ang = 2 * np.pi * (np.arange(extra) + 0.5) / extra
        quasi = np.column_stack([np.cos(ang), np.sin(ang)])
    else:
        from scipy.stats import norm, qmc

        u = qmc.Halton(d, scramble=False).random(extra + 1)[1:]
        quasi = norm.ppf(u)
        quasi /= np.linalg.norm(quasi, axis=1, keepdims=True)
    return np.vstack([axes, quasi])


def _kkt_polish(obj: Objective, con: PearsonConstraint, L: float, x: np.ndarray,
                max_iter: int = 30) -> Optional[np.ndarray]:
    """Newton on ``grad f = lam grad g, g = L`` from a point near a boundary maximum."""
    d = x.size
    gg = con.grad(x)
    lam = float(_f_grad(obj, x) @ gg / (gg @ gg))
    for _ in range(max_iter):
        gf = _f_grad(obj, x)
        gg = con.grad(x)
        r = np.concatenate([gf - lam * gg, [float(con.value(x)) - L]])
        if np.linalg.norm(r) <= 1e-13 * max(1.0, np.linalg.norm(gf)):
            return x
        J = np.zeros((d + 1, d + 1))
        J[:d, :d] = _f_hess(obj, x) - lam * con.hess(x)
        J[:d, d] = -gg
        J[d, :d] = gg
        try:
            delta = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            return None
        x = x + delta[:d]
        lam += delta[d]
        if np.any(_full(x) <= 0) or not np.all(np.isfinite(x)):
            return None
    return x


_ASCENT_GTOL = 1e-4


def maximize_over_set(obj: Objective, observed: CountVector, spec: ConfidenceSpec,
                      n_starts: int = 32, max_ascent: int = 60) -> OptimumResult:
    """Maximum of ``obj`` over the Gaussian superset (boundary ray shooting)."""
    L, _ = _prepare(obj, observed, spec)
    d = observed.d
    if L is None:
        return OptimumResult(_f_at_vertices(obj, d), None, vacuous=True)
    con = PearsonConstraint(observed)
    phat = con.phat

    def boundary(U, t0=None):
        t = con.ray_root(U, L, t0)
        return phat + t[:, None] * U, t

    U = _start_directions(d, n_starts)
    X, T = boundary(U)
    F = _f_value(obj, X)
    iters = 0
    if d > 1:
        eta = np.full(U.shape[0], 0.1)
        active = np.ones(U.shape[0], dtype=bool)
        for _ in range(max_ascent):
            iters += 1
            gf = _f_grad(obj, X)
            gg = con.grad(X)
            ratio = np.sum(gf * U, axis=1) / np.sum(gg * U, axis=1)
            G = T[:, None] * (gf - ratio[:, None] * gg)
            G -= np.sum(G * U, axis=1)[:, None] * U
            gnorm2 = np.sum(G * G, axis=1)
            active &= gnorm2 > _ASCENT_GTOL**2
            if not active.any():
                break
            step = eta[:, None] * G / np.sqrt(np.maximum(gnorm2, 1e-300))[:, None]
            U_new = U + np.where(active[:, None], step, 0.0)
            U_new /= np.linalg.norm(U_new, axis=1, keepdims=True)
            X_new, T_new = boundary(U_new, T)
            F_new = _f_value(obj, X_new)
            ok = active & (F_new >= F + _ARMIJO * eta * np.sqrt(gnorm2))
            U = np.where(ok[:, None], U_new, U)
            X = np.where(ok[:, None], X_new, X)
            T = np.where(ok, T_new, T)
            F = np.where(ok, F_new, F)
            eta = np.where(ok, np.minimum(eta * 1.5, 1.0), eta * _BACKTRACK)
            active &= eta > 1e-10

    # distinct candidates, best first, then polish each on the KKT system
    order = np.argsort(-F, kind="stable")
    reps: list[np.ndarray] = []
    for i in order:
        if all(np.linalg.norm(X[i] - r) > 1e-3 for r in reps):
            reps.append(X[i])
    cands = []
    for x0 in reps:
        x = _kkt_polish(obj, con, L, x0) if d > 1 else x0
        if x is None or np.linalg.norm(x - x0) > 1e-2:
            x = x0
        u = (x - phat)[None, :]
        xb, _ = boundary(u)
        xb = xb[0]
        fb = float(_f_value(obj, xb))
        f0 = float(_f_value(obj, x0))
        if fb < f0:
            xb, fb = x0, f0
        cands.append((fb, xb))
    cands.sort(key=lambda c: -c[0])
    best_val, best_x = cands[0]
    multiple = any(
        np.linalg.norm(x - best_x) >= 1e-4 and abs(v - best_val) <= 1e-8 for v, x in cands[1:]
    )
    gg = con.grad(best_x)
    gf = _f_grad(obj, best_x)
    lam = float(gf @ gg / (gg @ gg))
    resid = float(np.linalg.norm(gf - lam * gg))
    bres = abs(float(con.value(best_x)) - L)
    return OptimumResult(best_val, make_simplex_point(best_x), iters, resid, lam,
                         boundary_residual=bres, multiple_optima=multiple)


# ---------------------------------------------------------------------------
# d = 1 exact path
# ---------------------------------------------------------------------------


def _binom_log_pmf(n: int, p: float) -> np.ndarray:
    lf = log_factorial_table(n)
    k = np.arange(n + 1)
    return lf[n] - lf[k] - lf[n - k] + k * math.log(p) + (n - k) * math.log1p(-p)


def _log_tail(n: int, p: float, k: int, upper: bool) -> float:
    lp = _binom_log_pmf(n, p)
    part = lp[k:] if upper else lp[: k + 1]
    top = part.max()
    return float(top + math.log(np.exp(part - top).sum()))


def binomial_exact_interval(n: int, k: int, alpha: float, tol: float = 1e-12) -> tuple[float, float]:
    """Equal-tailed exact binomial interval by bisection on log-space tail sums."""
    if n < 1 or not 0 <= k <= n:
        raise DomainError(f"need 0 <= k <= n and n >= 1, got n={n}, k={k}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    target = math.log(alpha / 2)

    def solve(upper: bool) -> float:
        lo, hi = 0.0, 1.0
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            val = _log_tail(n, mid, k, upper)
            # lower tail falls with p, upper tail rises with p
            if (val > target) != upper:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    p_lo = 0.0 if k == 0 else solve(True)
    p_hi = 1.0 if k == n else solve(False)
    return p_lo, p_hi


def _optimize_interval(obj: Objective, lo: float, hi: float):
    def f(x):
        return float(_f_value(obj, np.array([x])))

    def df(x):
        return float(_f_grad(obj, np.array([x]))[0])

    if df(lo) >= 0:
        xmin = lo
    elif df(hi) <= 0:
        xmin = hi
    else:
        a, b = lo, hi
        for _ in range(200):
            mid = 0.5 * (a + b)
            if df(mid) < 0:
                a = mid
            else:
                b = mid
            if b - a < 1e-15:
                break
        xmin = 0.5 * (a + b)
    xmax = lo if f(lo) >= f(hi) else hi
    return (f(xmin), xmin), (f(xmax), xmax)


# ---------------------------------------------------------------------------
# top level
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundResult:
    lambda_lower: float
    lambda_upper: float
    argmin: Optional[SimplexPoint]
    argmax: Optional[SimplexPoint]
    threshold_L: Optional[float]
    iterations: int
    kkt_residual: float
    diagnostics: dict = field(default_factory=dict)


def confidence_bounds(observed: CountVector, obj: Objective, spec: ConfidenceSpec = ConfidenceSpec(),
                      method: str = "auto") -> BoundResult:
    """Lower and upper confidence bounds for ``obj`` at the true weights.

    ``method="auto"`` uses the exact binomial interval when ``d == 1`` and
    the Gaussian superset otherwise; ``method="gaussian"`` forces the
    latter for every ``d``.
    """
    if method not in ("auto", "gaussian"):
        raise ValueError(f"unknown method {method!r}")
    _require_positive(observed)
    n, d = observed.total, observed.d
    eps = spec.epsilon(n, d)
    alpha_prime = spec.alpha - eps
    diag = {"alpha": spec.alpha, "epsilon": eps, "alpha_prime": alpha_prime, "method": "gaussian"}
    if d == 1 and method == "auto" and not isinstance(observed, PseudoCounts):
        lo, hi = binomial_exact_interval(n, int(observed.counts[0]), spec.alpha)
        (vmin, xmin), (vmax, xmax) = _optimize_interval(obj, lo, hi)
        diag.update(method="binomial_exact", interval=[lo, hi], alpha_prime=spec.alpha, epsilon=0.0)
        return BoundResult(vmin, vmax, make_simplex_point([xmin]), make_simplex_point([xmax]),
                           None, 0, 0.0, diag)
    lower = minimize_over_set(obj, observed, spec)
    upper = maximize_over_set(obj, observed, spec)
    vacuous = lower.vacuous or upper.vacuous
    diag.update(
        vacuous_set=vacuous,
        multiple_optima=upper.multiple_optima,
        boundary_residual=upper.boundary_residual,
        max_kkt_residual=upper.kkt_residual,
        multiplier=lower.multiplier,
    )
    L = None if vacuous else threshold_L(d, alpha_prime)
    return BoundResult(lower.value, upper.value, lower.point, upper.point, L,
                       lower.iterations + upper.iterations, lower.kkt_residual, diag)
