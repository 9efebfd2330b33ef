import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from simplex_conf.approx import epsilon_n
from simplex_conf.confopt import (
    ConfidenceSpec,
    Objective,
    PearsonConstraint,
    PseudoCounts,
    binomial_exact_interval,
    confidence_bounds,
    containment_check,
    eval_objective,
    exact_set_mass,
    exact_set_member,
    fig2_matrix,
    gaussian_set_member,
    interior_grid,
    maximize_over_set,
    minimize_over_set,
    neg_entropy,
    quadratic,
    smooth_half,
    threshold_L,
)
from simplex_conf.domain import count_vector_from_full, make_count_vector, make_simplex_point
from simplex_conf.errors import DimensionMismatch, DomainError, ZeroCount
from simplex_conf.gaussian import pearson_statistic

PRACTICAL = ConfidenceSpec(alpha=0.05)
THEORETICAL = ConfidenceSpec(alpha=0.05, epsilon_mode="theoretical")
OBS = count_vector_from_full([20, 30, 50])
A2 = np.array([[2.0, 0.5], [0.5, 3.0]])
LAMBDA0_FIG1 = -1.0296531


def grid_oracle(obj, observed, alpha=0.05, size=500):
    """Min and max of ``obj`` over a size x size interior grid restricted to the Gaussian set."""
    axis = np.linspace(0, 1, size + 2)[1:-1]
    x, y = np.meshgrid(axis, axis, indexing="ij")
    pts = np.column_stack([x.ravel(), y.ravel()])
    pts = pts[pts.sum(axis=1) < 1 - 1e-12]
    g = PearsonConstraint(observed).value(pts)
    feas = pts[g <= threshold_L(observed.d, alpha)]
    full = np.column_stack([feas, 1 - feas.sum(axis=1)])
    if obj.kind == "neg_entropy":
        vals = np.sum(full * np.log(full), axis=1)
    else:
        vals = np.einsum("ij,jk,ik->i", feas, obj.A, feas)
    return vals.min(), vals.max()


@st.composite
def interior(draw, d):
    raw = draw(st.lists(st.floats(0.03, 1.0), min_size=d + 1, max_size=d + 1))
    total = sum(raw)
    return np.array([r / total for r in raw[:-1]])


class TestConfidenceSpec:
    def test_practical(self):
        assert PRACTICAL.epsilon(100, 2) == 0.0 and PRACTICAL.alpha_prime(100, 2) == 0.05

    def test_theoretical(self):
        assert THEORETICAL.epsilon(10**6, 2) == epsilon_n(10**6, 2, 3)
        assert THEORETICAL.alpha_prime(10**6, 2) < 0

    @pytest.mark.parametrize("alpha", [0, 1, -0.1])
    def test_alpha_range(self, alpha):
        with pytest.raises(DomainError):
            ConfidenceSpec(alpha=alpha)

    def test_mode(self):
        with pytest.raises(ValueError):
            ConfidenceSpec(epsilon_mode="exact")


class TestObjective:
    def test_uniform_entropy(self):
        ev = eval_objective(neg_entropy(), make_simplex_point((1 / 3, 1 / 3)))
        assert ev.value == pytest.approx(-math.log(3))
        np.testing.assert_allclose(ev.gradient, 0, atol=1e-15)

    def test_closed_forms(self):
        p = make_simplex_point((0.2, 0.3))
        ev = eval_objective(neg_entropy(), p)
        assert ev.value == pytest.approx(sum(q * math.log(q) for q in (0.2, 0.3, 0.5)))
        np.testing.assert_allclose(ev.gradient, [math.log(0.4), math.log(0.6)])
        np.testing.assert_allclose(ev.hessian, np.diag([5, 10 / 3]) + 2)
        evq = eval_objective(quadratic(A2), p)
        x = np.array([0.2, 0.3])
        assert evq.value == pytest.approx(x @ A2 @ x)
        np.testing.assert_allclose(evq.gradient, 2 * A2 @ x)
        np.testing.assert_allclose(evq.hessian, 2 * A2)

    @settings(max_examples=40, deadline=None)
    @given(interior(2), st.sampled_from(["neg_entropy", "quadratic"]))
    def test_gradient_finite_differences(self, x, kind):
        obj = neg_entropy() if kind == "neg_entropy" else quadratic(A2)
        h = 1e-6
        ev = eval_objective(obj, make_simplex_point(x))
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            fd = (eval_objective(obj, make_simplex_point(x + e)).value
                  - eval_objective(obj, make_simplex_point(x - e)).value) / (2 * h)
            assert fd == pytest.approx(ev.gradient[j], abs=1e-6)

    def test_validation(self):
        with pytest.raises(ValueError):
            quadratic([[1.0, 2.0], [2.0, 1.0]])
        with pytest.raises(ValueError):
            quadratic([[1.0, 0.2], [0.0, 1.0]])
        with pytest.raises(ValueError):
            Objective("cubic")
        with pytest.raises(DimensionMismatch):
            eval_objective(quadratic(A2), make_simplex_point((0.1, 0.2, 0.3)))

    def test_fig2_matrix(self):
        A = fig2_matrix([1, 2, 3, 4])
        np.testing.assert_array_equal(A, [[2, 0.5, 0.25], [0.5, 3, 0.75], [0.25, 0.75, 4]])
        np.linalg.cholesky(A)

    def test_custom(self):
        obj = Objective("custom", fn=lambda x: float(x @ x), grad=lambda x: 2 * x, hess=lambda x: 2 * np.eye(len(x)))
        assert eval_objective(obj, make_simplex_point((0.2, 0.3))).value == pytest.approx(0.13)


class TestPearsonConstraint:
    con = PearsonConstraint(OBS)

    @settings(max_examples=40, deadline=None)
    @given(interior(2))
    def test_value_matches_statistic(self, x):
        assert self.con.value(x) == pytest.approx(pearson_statistic(OBS, make_simplex_point(x)), rel=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(interior(2))
    def test_derivatives_finite_differences(self, x):
        h = 1e-6
        g = self.con.grad(x)
        H = self.con.hess(x)
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            fd = (self.con.value(x + e) - self.con.value(x - e)) / (2 * h)
            assert fd == pytest.approx(g[j], rel=1e-5, abs=1e-5 * max(1, abs(self.con.value(x))))
            fdg = (self.con.grad(x + e) - self.con.grad(x - e)) / (2 * h)
            np.testing.assert_allclose(fdg, H[:, j], rtol=1e-5, atol=1e-5 * np.abs(H).max())

    @settings(max_examples=60, deadline=None)
    @given(interior(2), interior(2), st.floats(0.01, 0.99))
    def test_quasiconvex(self, p, q, t):
        gp, gq = self.con.value(p), self.con.value(q)
        assert self.con.value(t * p + (1 - t) * q) <= max(gp, gq) + 1e-10 * max(1, gp, gq)

    def test_ray_root(self):
        rng = np.random.default_rng(0)
        U = rng.standard_normal((50, 2))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        t = self.con.ray_root(U, 5.99)
        vals = self.con.value(self.con.phat + t[:, None] * U)
        np.testing.assert_allclose(vals, 5.99, rtol=1e-12)


class TestExactSet:
    def test_examples(self):
        p = make_simplex_point((0.5,))
        k = make_count_vector((1,), 2)
        assert exact_set_member(p, k, 0.4)
        assert not exact_set_member(p, k, 0.6)

    def test_mode_is_member(self):
        k = make_count_vector((10,), 20)
        assert exact_set_member(make_simplex_point((0.5,)), k, 0.01)

    def test_mass_brute_force(self):
        p = make_simplex_point((0.3,))
        k = make_count_vector((4,), 10)
        pmf = stats.binom.pmf(np.arange(11), 10, 0.3)
        assert exact_set_mass(p, k) == pytest.approx(pmf[pmf >= pmf[4] * (1 - 1e-12)].sum(), rel=1e-12)

    def test_zero_count(self):
        with pytest.raises(ZeroCount):
            exact_set_member(make_simplex_point((0.5,)), make_count_vector((0,), 5), 0.05)


class TestGaussianSet:
    def test_at_phat(self):
        p = make_simplex_point((0.2, 0.3))
        for a in (0.01, 0.5, 0.99):
            assert gaussian_set_member(p, OBS, a)

    def test_vacuous(self):
        m = gaussian_set_member(make_simplex_point((0.01, 0.01)), OBS, -3.0)
        assert m and m.vacuous

    @settings(max_examples=60, deadline=None)
    @given(interior(2), st.floats(0.001, 0.5))
    def test_threshold_equivalence(self, x, a):
        p = make_simplex_point(x)
        inside = pearson_statistic(OBS, p) <= threshold_L(2, a)
        assert bool(gaussian_set_member(p, OBS, a)) == inside or abs(pearson_statistic(OBS, p) - threshold_L(2, a)) < 1e-9

    def test_threshold(self):
        assert threshold_L(2, 0.05) == pytest.approx(-2 * math.log(0.05), rel=1e-14)
        assert threshold_L(3, 0.01) > threshold_L(3, 0.05) > threshold_L(3, 0.2)
        with pytest.raises(DomainError):
            threshold_L(2, 0.0)


class TestContainment:
    def test_theoretical_vacuous(self):
        rep = containment_check(make_count_vector((25,), 50), 0.05, 999)
        assert rep.vacuous and rep.contained
        assert math.isfinite(rep.min_empirical_epsilon) and rep.min_empirical_epsilon >= 0
        assert rep.exact_members > 0 and rep.grid_points == 999

    def test_deterministic(self):
        k = make_count_vector((25,), 50)
        assert containment_check(k, 0.05, 999) == containment_check(k, 0.05, 999)

    def test_trend_nonincreasing(self):
        eps = [containment_check(make_count_vector((n // 2,), n), 0.05, 999).min_empirical_epsilon
               for n in (50, 200, 800)]
        assert eps[0] >= eps[1] >= eps[2]

    def test_margin_brute_force(self):
        k = make_count_vector((20,), 50)
        rep = containment_check(k, 0.05, 199)
        grid = interior_grid(1, 199)[:, 0]
        pmf_obs = stats.binom.pmf(20, 50, grid)
        members = []
        for p, po in zip(grid, pmf_obs):
            pmf = stats.binom.pmf(np.arange(51), 50, p)
            if pmf[pmf >= po * (1 - 1e-9)].sum() <= 0.95:
                members.append(p)
        stat = np.array([pearson_statistic(k, make_simplex_point((p,))) for p in members])
        assert rep.exact_members == len(members)
        assert rep.level_margin == pytest.approx(stats.chi2.cdf(stat, 1).max() - 0.95, abs=1e-9)

    def test_grid_dimension(self):
        with pytest.raises(DomainError):
            interior_grid(3, 10)


class TestOptimizers:
    @pytest.mark.parametrize("obj", [neg_entropy(), quadratic(A2)], ids=["entropy", "quadratic"])
    def test_against_grid_oracle(self, obj):
        lo, hi = grid_oracle(obj, OBS)
        mn = minimize_over_set(obj, OBS, PRACTICAL)
        mx = maximize_over_set(obj, OBS, PRACTICAL)
        assert mn.value == pytest.approx(lo, abs=2e-3) and mn.value <= lo + 1e-12
        assert mx.value == pytest.approx(hi, abs=2e-3) and mx.value >= hi - 1e-12
        assert mn.kkt_residual <= 1e-6 and mx.kkt_residual <= 1e-6
        assert mx.boundary_residual <= 1e-8

    def test_bounds_bracket_phat(self):
        for obj in (neg_entropy(), quadratic(A2)):
            f_hat = eval_objective(obj, make_simplex_point((0.2, 0.3))).value
            assert minimize_over_set(obj, OBS, PRACTICAL).value <= f_hat
            assert maximize_over_set(obj, OBS, PRACTICAL).value >= f_hat

    def test_interior_minimum(self):
        res = minimize_over_set(neg_entropy(), count_vector_from_full([33, 34, 33]), PRACTICAL)
        assert res.value == pytest.approx(-math.log(3), abs=1e-9)
        np.testing.assert_allclose(res.point.full, 1 / 3, atol=1e-5)
        assert res.multiplier == pytest.approx(0, abs=1e-6)

    def test_max_on_boundary(self):
        obs = count_vector_from_full([12, 40, 30, 18])
        obj = quadratic(fig2_matrix([1, 2, 3, 4]))
        res = maximize_over_set(obj, obs, PRACTICAL)
        L = threshold_L(3, 0.05)
        assert abs(PearsonConstraint(obs).value(res.point.weights) - L) <= 1e-8
        assert res.kkt_residual <= 1e-6

    def test_multiple_optima_symmetric(self):
        res = maximize_over_set(neg_entropy(), count_vector_from_full([30, 30, 30]), PRACTICAL)
        assert res.multiple_optima

    def test_vacuous(self):
        obs = count_vector_from_full([20, 30, 50])
        lo = minimize_over_set(neg_entropy(), obs, THEORETICAL)
        hi = maximize_over_set(neg_entropy(), obs, THEORETICAL)
        assert lo.vacuous and hi.vacuous
        assert lo.value == pytest.approx(-math.log(3), abs=1e-8)
        assert hi.value == 0.0

    def test_zero_count(self):
        with pytest.raises(ZeroCount):
            minimize_over_set(neg_entropy(), count_vector_from_full([0, 30, 50]), PRACTICAL)

    def test_quadratic_dimension(self):
        with pytest.raises(DimensionMismatch):
            minimize_over_set(quadratic(np.eye(3)), OBS, PRACTICAL)


class TestBinomialInterval:
    @staticmethod
    def clopper_pearson(n, k, alpha):
        lo = 0.0 if k == 0 else stats.beta.ppf(alpha / 2, k, n - k + 1)
        hi = 1.0 if k == n else stats.beta.ppf(1 - alpha / 2, k + 1, n - k)
        return lo, hi

    def test_example(self):
        lo, hi = binomial_exact_interval(100, 50, 0.05)
        assert lo == pytest.approx(0.39832, abs=1e-5) and hi == pytest.approx(0.60168, abs=1e-5)
        ref = self.clopper_pearson(100, 50, 0.05)
        assert lo == pytest.approx(ref[0], abs=1e-9) and hi == pytest.approx(ref[1], abs=1e-9)

    @pytest.mark.parametrize("n,k", [(10, 0), (10, 10), (37, 5), (500, 123), (1, 1)])
    def test_against_beta_quantiles(self, n, k):
        lo, hi = binomial_exact_interval(n, k, 0.1)
        ref = self.clopper_pearson(n, k, 0.1)
        assert lo == pytest.approx(ref[0], abs=1e-9) and hi == pytest.approx(ref[1], abs=1e-9)

    def test_edges(self):
        assert binomial_exact_interval(20, 0, 0.05)[0] == 0.0
        assert binomial_exact_interval(20, 20, 0.05)[1] == 1.0

    def test_exhaustive_coverage(self):
        n = 50
        intervals = [binomial_exact_interval(n, k, 0.05) for k in range(n + 1)]
        for p in np.arange(1, 10) / 10:
            pmf = stats.binom.pmf(np.arange(n + 1), n, p)
            cover = sum(m for m, (lo, hi) in zip(pmf, intervals) if lo <= p <= hi)
            assert cover >= 0.95

    @pytest.mark.parametrize("n,k,alpha", [(10, 11, 0.05), (0, 0, 0.05), (10, 3, 1.5)])
    def test_domain(self, n, k, alpha):
        with pytest.raises(DomainError):
            binomial_exact_interval(n, k, alpha)


class TestConfidenceBounds:
    def test_binary_entropy(self):
        res = confidence_bounds(make_count_vector((50,), 100), neg_entropy())
        assert res.lambda_lower == pytest.approx(-math.log(2), abs=1e-12)
        lo = 0.3983211295
        assert res.lambda_upper == pytest.approx(lo * math.log(lo) + (1 - lo) * math.log(1 - lo), abs=1e-8)
        assert res.lambda_upper == pytest.approx(-0.6723, abs=1e-4)
        assert res.diagnostics["method"] == "binomial_exact"

    def test_fig1_instance_brackets_lambda0(self):
        res = confidence_bounds(OBS, neg_entropy())
        assert res.lambda_lower < LAMBDA0_FIG1 < res.lambda_upper
        assert res.threshold_L == pytest.approx(5.9914645, abs=1e-7)

    def test_alpha_monotone(self):
        out = [confidence_bounds(OBS, neg_entropy(), ConfidenceSpec(alpha=a)) for a in (0.01, 0.05, 0.2)]
        assert out[0].lambda_lower <= out[1].lambda_lower <= out[2].lambda_lower
        assert out[0].lambda_upper >= out[1].lambda_upper >= out[2].lambda_upper

    @settings(max_examples=15, deadline=None)
    @given(st.lists(st.integers(1, 200), min_size=2, max_size=4))
    def test_lower_below_upper(self, counts):
        obs = count_vector_from_full(counts)
        res = confidence_bounds(obs, neg_entropy())
        assert res.lambda_lower <= res.lambda_upper

    def test_binomial_vs_gaussian_path(self):
        obs = make_count_vector((200,), 400)
        exact = confidence_bounds(obs, neg_entropy())
        gauss = confidence_bounds(obs, neg_entropy(), method="gaussian")
        assert abs(exact.lambda_lower - gauss.lambda_lower) <= 0.02
        assert abs(exact.lambda_upper - gauss.lambda_upper) <= 0.02
        assert gauss.diagnostics["method"] == "gaussian"

    def test_smoothed_counts(self):
        pseudo = smooth_half(count_vector_from_full([0, 30, 50]))
        assert isinstance(pseudo, PseudoCounts) and pseudo.total == 81.5
        res = confidence_bounds(pseudo, neg_entropy())
        assert res.lambda_lower < res.lambda_upper
        binary = confidence_bounds(smooth_half(make_count_vector((0,), 10)), neg_entropy())
        assert binary.diagnostics["method"] == "gaussian"
