import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import betainc

from gonogo.stats import (
    BetaPrior,
    DirichletPrior,
    default_prior,
    dirichlet_marginal_tail,
    excess_prob,
    futility_prob,
    reg_inc_beta,
)

shapes = st.floats(min_value=0.05, max_value=80.0, allow_nan=False)
unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


class TestRegIncBeta:
    def test_symmetry_point(self):
        assert reg_inc_beta(0.5, 2, 2) == pytest.approx(0.5, abs=1e-12)

    def test_full_interval(self):
        assert reg_inc_beta(1.0, 3.7, 0.2) == 1.0

    def test_closed_form_a_equal_one(self):
        # I_x(1, b) = 1 - (1-x)^b
        assert reg_inc_beta(0.2, 1, 11) == pytest.approx(0.9141006541, abs=1e-10)

    def test_closed_form_b_equal_one(self):
        # I_x(a, 1) = x^a
        assert reg_inc_beta(0.2, 11, 1) == pytest.approx(0.2**11, abs=1e-15)

    @pytest.mark.parametrize("x,a,b", [(-0.1, 1, 1), (1.1, 1, 1), (0.5, 0, 1), (0.5, 1, -2)])
    def test_domain_violations(self, x, a, b):
        with pytest.raises(ValueError):
            reg_inc_beta(x, a, b)

    @given(x=unit, a=shapes, b=shapes)
    @settings(max_examples=200, deadline=None)
    def test_matches_scipy(self, x, a, b):
        assert reg_inc_beta(x, a, b) == pytest.approx(betainc(a, b, x), abs=1e-10)

    @given(x=st.floats(min_value=1e-6, max_value=1 - 1e-6), a=shapes, b=shapes)
    @settings(max_examples=200, deadline=None)
    def test_complement_identity(self, x, a, b):
        assert reg_inc_beta(x, a, b) + reg_inc_beta(1 - x, b, a) == pytest.approx(1.0, abs=1e-9)


class TestPriors:
    def test_beta_prior_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            BetaPrior(0.0, 1.0)
        with pytest.raises(ValueError):
            BetaPrior(1.0, -1.0)

    def test_default_prior_centres_on_null(self):
        p = default_prior(0.3)
        assert (p.a0, p.b0) == (0.3, 0.7)

    def test_dirichlet_needs_two_categories(self):
        with pytest.raises(ValueError):
            DirichletPrior((1.0,))
        with pytest.raises(ValueError):
            DirichletPrior((1.0, 0.0))


class TestFutilityProb:
    def test_prior_tail_uniform(self):
        for phi in (0.1, 0.37, 0.8):
            assert futility_prob(0, 0, phi, BetaPrior(1, 1)) == pytest.approx(phi, abs=1e-12)

    def test_all_failures(self):
        assert futility_prob(0, 10, 0.2, BetaPrior(1, 1)) == pytest.approx(0.9141006541, abs=1e-10)

    def test_all_successes(self):
        assert futility_prob(10, 10, 0.2, BetaPrior(1, 1)) == pytest.approx(2.048e-8, rel=1e-6)

    def test_rejects_x_above_m(self):
        with pytest.raises(ValueError):
            futility_prob(3.0, 2.5, 0.2, BetaPrior(1, 1))
        with pytest.raises(ValueError):
            futility_prob(-0.5, 2.0, 0.2, BetaPrior(1, 1))

    @given(
        x=st.floats(min_value=0, max_value=20),
        extra=st.floats(min_value=0.1, max_value=20),
        phi=st.floats(min_value=0.05, max_value=0.95),
    )
    @settings(max_examples=150, deadline=None)
    def test_monotone_in_x(self, x, extra, phi):
        prior = BetaPrior(phi, 1 - phi)
        m = x + extra
        lo = futility_prob(min(x + extra / 2, m), m, phi, prior)
        hi = futility_prob(x, m, phi, prior)
        assert hi > lo

    @given(
        x=st.floats(min_value=0, max_value=20),
        m1=st.floats(min_value=0, max_value=15),
        dm=st.floats(min_value=0.1, max_value=15),
        phi=st.floats(min_value=0.05, max_value=0.95),
    )
    @settings(max_examples=150, deadline=None)
    def test_monotone_in_m(self, x, m1, dm, phi):
        prior = BetaPrior(phi, 1 - phi)
        m1 = max(m1, x)
        assert futility_prob(x, m1 + dm, phi, prior) > futility_prob(x, m1, phi, prior)

    def test_fractional_value_between_integer_brackets(self):
        prior = BetaPrior(0.2, 0.8)
        for x, m in [(2, 7.3), (0, 3.6), (4.0, 11.9)]:
            mid = futility_prob(x, m, 0.2, prior)
            assert futility_prob(x, math.floor(m), 0.2, prior) < mid < futility_prob(x, math.ceil(m), 0.2, prior)


class TestExcessProb:
    def test_prior_complement(self):
        assert excess_prob(0, 0, 0.3, BetaPrior(1, 1)) == pytest.approx(0.7, abs=1e-12)

    def test_all_events(self):
        assert excess_prob(5, 5, 0.3, BetaPrior(1, 1)) == pytest.approx(1 - 0.3**6, abs=1e-10)

    @given(
        x=st.floats(min_value=0, max_value=12),
        extra=st.floats(min_value=0, max_value=12),
        phi=st.floats(min_value=0.05, max_value=0.95),
    )
    @settings(max_examples=150, deadline=None)
    def test_complement_of_futility(self, x, extra, phi):
        prior = BetaPrior(0.4, 1.3)
        m = x + extra
        assert excess_prob(x, m, phi, prior) + futility_prob(x, m, phi, prior) == pytest.approx(1.0, abs=1e-12)


class TestDirichletMarginalTail:
    def test_two_category_reduces_to_beta(self):
        prior = DirichletPrior((0.4, 0.6))
        got = dirichlet_marginal_tail((3.0, 5.5), prior, {0}, 0.35)
        want = futility_prob(3.0, 8.5, 0.35, BetaPrior(0.4, 0.6))
        assert got == pytest.approx(want, abs=1e-12)

    def test_four_category_aggregation(self):
        prior = DirichletPrior((0.25, 0.25, 0.25, 0.25))
        got = dirichlet_marginal_tail((1, 2, 3, 4), prior, {0, 1}, 0.5)
        assert got == pytest.approx(reg_inc_beta(0.5, 3.5, 7.5), abs=1e-12)

    def test_rejects_empty_and_full_subsets(self):
        prior = DirichletPrior((1, 1, 1, 1))
        with pytest.raises(ValueError):
            dirichlet_marginal_tail((1, 1, 1, 1), prior, set(), 0.5)
        with pytest.raises(ValueError):
            dirichlet_marginal_tail((1, 1, 1, 1), prior, {0, 1, 2, 3}, 0.5)

    @given(st.data())
    @settings(max_examples=100, deadline=None)
    def test_matches_aggregated_futility(self, data):
        k = data.draw(st.integers(min_value=2, max_value=6))
        alpha = tuple(data.draw(st.floats(min_value=0.1, max_value=3.0)) for _ in range(k))
        counts = tuple(data.draw(st.floats(min_value=0.0, max_value=9.0)) for _ in range(k))
        size = data.draw(st.integers(min_value=1, max_value=k - 1))
        subset = set(range(size))
        phi = data.draw(st.floats(min_value=0.05, max_value=0.95))
        a = sum(alpha[i] + counts[i] for i in subset)
        b = sum(alpha[i] + counts[i] for i in range(k) if i not in subset)
        x_eff = sum(counts[i] for i in subset)
        m_eff = sum(counts)
        got = dirichlet_marginal_tail(counts, DirichletPrior(alpha), subset, phi)
        via_beta = futility_prob(x_eff, m_eff, phi, BetaPrior(a - x_eff, b - (m_eff - x_eff)))
        assert got == pytest.approx(via_beta, abs=1e-12)
