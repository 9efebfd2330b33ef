import math
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest
from scipy import stats

from simplex_conf.domain import make_count_vector, make_simplex_point
from simplex_conf.errors import CapExceeded, DimensionMismatch, DomainError
from simplex_conf.multinomial import (
    central_moments,
    enumerate_support,
    log_pmf,
    log_pmf_array,
    sample,
    support_array,
    support_size,
)


def exact_pmf(counts, p_full):
    """Rational-arithmetic oracle for the multinomial pmf."""
    n = sum(counts)
    coef = Fraction(math.factorial(n))
    for c in counts:
        coef /= math.factorial(c)
    prob = coef
    for c, p in zip(counts, p_full):
        prob *= Fraction(p) ** c
    return float(prob)


class TestLogPmf:
    def test_examples(self):
        assert log_pmf(make_count_vector((1,), 2), make_simplex_point((0.5,))) == pytest.approx(math.log(0.5))
        assert log_pmf(make_count_vector((0, 0), 1), make_simplex_point((0.2, 0.3))) == pytest.approx(math.log(0.5))
        assert log_pmf(make_count_vector((1, 1), 3), make_simplex_point((0.2, 0.3))) == pytest.approx(math.log(0.18))

    @pytest.mark.parametrize("counts", [(3, 5, 2), (0, 0, 7), (40, 1, 59), (120, 300, 80)])
    def test_against_rational(self, counts):
        p = make_simplex_point((0.2, 0.3))
        k = make_count_vector(counts[:-1], sum(counts))
        expected = exact_pmf(counts, [Fraction(2, 10), Fraction(3, 10), Fraction(5, 10)])
        assert math.exp(log_pmf(k, p)) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("counts", [(250_000, 375_000, 375_000), (249_311, 376_020, 374_669),
                                        (251_000, 375_200, 373_800)])
    def test_large_n_against_mpmath(self, counts):
        # dyadic weights sum to exactly 1 in floating point, so the oracle is the same distribution
        mp.mp.dps = 40
        n = sum(counts)
        full = (0.25, 0.375, 0.375)
        ref = mp.loggamma(n + 1) + sum(c * mp.log(q) - mp.loggamma(c + 1) for c, q in zip(counts, full))
        k = make_count_vector(counts[:-1], n)
        assert math.exp(log_pmf(k, make_simplex_point(full[:-1])) - float(ref)) == pytest.approx(1, abs=1e-12)

    @pytest.mark.parametrize("counts", [(0, 1000, 999_000), (1, 500_000, 499_999)])
    def test_far_tail_relative_log_accuracy(self, counts):
        # here |log pmf| ~ 1e5, so only the logarithm itself can be compared
        mp.mp.dps = 40
        n = sum(counts)
        full = (0.25, 0.375, 0.375)
        ref = mp.loggamma(n + 1) + sum(c * mp.log(q) - mp.loggamma(c + 1) for c, q in zip(counts, full))
        k = make_count_vector(counts[:-1], n)
        assert log_pmf(k, make_simplex_point(full[:-1])) == pytest.approx(float(ref), rel=1e-14)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            log_pmf(make_count_vector((1,), 3), make_simplex_point((0.2, 0.3)))

    def test_vectorized_matches_scalar(self):
        p = make_simplex_point((0.2, 0.3))
        support = support_array(7, 2)
        vec = log_pmf_array(support, 7, p)
        for row, v in zip(support, vec):
            assert v == pytest.approx(log_pmf(make_count_vector(row[:-1], 7), p), abs=1e-13)


class TestSupport:
    def test_sizes(self):
        assert len(list(enumerate_support(2, 2))) == 6
        assert [int(k.counts[0]) for k in enumerate_support(3, 1)] == [0, 1, 2, 3]

    def test_lexicographic_unique(self):
        arr = support_array(6, 3)
        assert arr.shape == (support_size(6, 3), 4)
        assert np.all(arr.sum(axis=1) == 6)
        assert len({tuple(r) for r in arr}) == arr.shape[0]
        keys = [tuple(r[:-1]) for r in arr]
        assert keys == sorted(keys)

    def test_generator_matches_array(self):
        gen = [tuple(k.full) for k in enumerate_support(5, 2)]
        arr = [tuple(r) for r in support_array(5, 2)]
        assert gen == arr

    def test_total_mass(self):
        p = make_simplex_point((0.2, 0.3))
        assert np.exp(log_pmf_array(support_array(20, 2), 20, p)).sum() == pytest.approx(1, abs=1e-10)

    @pytest.mark.parametrize("d", [1, 2, 3])
    @pytest.mark.parametrize("n", [1, 13, 60])
    def test_total_mass_grid(self, n, d):
        p = make_simplex_point(np.full(d, 1 / (d + 1.5)))
        assert np.exp(log_pmf_array(support_array(n, d), n, p)).sum() == pytest.approx(1, abs=1e-10)

    def test_cap(self):
        with pytest.raises(CapExceeded):
            support_array(100, 3, cap=1000)
        with pytest.raises(CapExceeded):
            next(enumerate_support(100, 3, cap=1000))


class TestSample:
    def test_total(self):
        k = sample(make_simplex_point((0.2, 0.3)), 50, np.random.default_rng(1))
        assert k.counts.sum() + k.last_count == 50

    def test_deterministic(self):
        p = make_simplex_point((0.2, 0.3))
        a = sample(p, 100, np.random.default_rng(7))
        b = sample(p, 100, np.random.default_rng(7))
        assert a == b

    def test_mean_counts(self):
        # derived: each mean count within 4 sd of n p
        n = 10**5
        p = make_simplex_point((0.2, 0.3))
        k = sample(p, n, np.random.default_rng(3))
        for c, pi in zip(k.full, p.full):
            assert abs(c - n * pi) <= 4 * math.sqrt(n * pi * (1 - pi))

    def test_goodness_of_fit(self):
        p = make_simplex_point((0.2, 0.3))
        rng = np.random.default_rng(11)
        support = support_array(5, 2)
        index = {tuple(r): i for i, r in enumerate(support)}
        observed = np.zeros(len(support))
        for _ in range(100_000):
            observed[index[tuple(sample(p, 5, rng).full)]] += 1
        expected = 100_000 * np.exp(log_pmf_array(support, 5, p))
        _, pval = stats.chisquare(observed, expected)
        assert pval > 1e-6


class TestCentralMoments:
    def test_examples(self):
        m = central_moments(2, 0.5)
        assert m.m3 == 0.0
        assert m.m2 == 0.25
        assert m.m4 == pytest.approx(0.125, abs=1e-15)

    @pytest.mark.parametrize("weights", [(0.5,), (0.2, 0.3)])
    @pytest.mark.parametrize("n", [2, 5, 10])
    def test_against_enumeration(self, n, weights):
        p = make_simplex_point(weights)
        support = support_array(n, p.d)
        prob = np.exp(log_pmf_array(support, n, p))
        delta = (support - n * p.full) / math.sqrt(n)
        for i, pi in enumerate(p.full):
            m = central_moments(n, pi)
            assert prob @ delta[:, i] ** 2 == pytest.approx(m.m2, abs=1e-10)
            assert prob @ delta[:, i] ** 3 == pytest.approx(m.m3, abs=1e-10)
            assert prob @ delta[:, i] ** 4 == pytest.approx(m.m4, abs=1e-10)

    @pytest.mark.parametrize("pi", [0.01, 0.3, 0.77])
    def test_jensen(self, pi):
        m = central_moments(7, pi)
        assert m.m2 >= 0 and m.m4 >= m.m2**2

    @pytest.mark.parametrize("n,pi", [(5, 0.0), (5, 1.0), (0, 0.5)])
    def test_domain(self, n, pi):
        with pytest.raises(DomainError):
            central_moments(n, pi)
