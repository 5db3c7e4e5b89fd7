import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rankdist.core import CardinalitySpectrum, EnergiaConstraint
from rankdist.equilibrium import solve_equilibrium
from rankdist.errors import DataError, DomainError, FitError
from rankdist.rankfit import (
    RankFit,
    build_ranks,
    curve_points,
    fit_rank_curve,
    invert_rank_ratio,
    rank_curve,
    synthetic_prices,
    theoretical_rank_from_equilibrium,
)

TRUE = dict(c1=-1.2, c2=1.2, alpha=2.0, gamma=1.5)


class TestRanks:
    def test_example(self):
        data = build_ranks([30.0, 10.0, 20.0])
        assert data.items() == [(10.0, 1), (20.0, 2), (30.0, 3)]
        assert data.r_le.tolist() == [1, 2, 3]
        assert data.r_minus.tolist() == [2, 1, 0]

    def test_ties(self):
        data = build_ranks([5.0, 1.0, 5.0, 2.0])
        assert data.order.tolist() == [1, 3, 0, 2]
        assert data.r_le.tolist() == [1, 2, 4, 4]
        w, r_le, r_minus = data.cutoffs()
        assert w.tolist() == [1.0, 2.0, 5.0] and r_le.tolist() == [1, 2, 4]

    @given(st.lists(st.floats(1e-3, 1e6), min_size=1, max_size=60))
    def test_counts_add_to_total(self, vals):
        data = build_ranks(vals)
        assert np.all(data.r_le + data.r_minus == len(vals))
        assert np.all(np.diff(data.r_le) >= 0)

    @pytest.mark.parametrize("bad", [[], [1.0, -2.0], [np.nan, 1.0]])
    def test_rejects(self, bad):
        with pytest.raises(DataError):
            build_ranks(bad)


class TestCurve:
    def test_examples(self):
        assert rank_curve(1.0, RankFit(1.0, 0.0, 1.0, 1.0)) == pytest.approx(0.5, rel=1e-15)
        assert rank_curve(1e12, RankFit(1.0, 0.3, 1.0, 1.0)) == pytest.approx(0.3, abs=1e-11)
        assert rank_curve(2.0, RankFit(2.0, 0.1, 0.5, 2.0)) == pytest.approx(2 / 3 + 0.1, rel=1e-15)

    def test_inflection(self):
        fit = RankFit(1.0, 0.0, 4.0, 2.0)
        assert fit.inflection_omega == 0.5

    def test_domain(self):
        with pytest.raises(DomainError):
            rank_curve(0.0, RankFit(1.0, 0.0, 1.0, 1.0))
        with pytest.raises(DomainError):
            RankFit(1.0, 0.0, -1.0, 1.0)


class TestInvert:
    def test_printed(self):
        assert invert_rank_ratio(3, 1, 1.0, 1.0) == pytest.approx(3.0)
        assert invert_rank_ratio(8, 2, 1.0, 2.0) == pytest.approx(2.0)

    @settings(max_examples=50)
    @given(st.floats(0.05, 20), st.floats(0.1, 10), st.floats(0.3, 3))
    def test_self_consistent_round_trip(self, w, alpha, gamma):
        total = 1000.0
        r_l = total / (1 + alpha * w**gamma)
        w_back = invert_rank_ratio(r_l, total - r_l, alpha, gamma, "self_consistent")
        assert w_back == pytest.approx(w, rel=1e-9)

    def test_errors(self):
        with pytest.raises(DomainError):
            invert_rank_ratio(0, 3, 1.0, 1.0)
        with pytest.raises(ValueError):
            invert_rank_ratio(1, 3, 1.0, 1.0, variant="other")


class TestSynthetic:
    def test_follows_curve(self):
        prices = synthetic_prices(n=500, **TRUE)
        x, y = curve_points(build_ranks(prices))
        np.testing.assert_allclose(y / 500, rank_curve(x, RankFit(**TRUE)), rtol=1e-12)

    def test_uncovered_range(self):
        with pytest.raises(DomainError, match="does not cover"):
            synthetic_prices(-1.0, 1.05, 2.0, 1.5, 100)


class TestFit:
    def test_noiseless_round_trip(self):
        fit = fit_rank_curve(synthetic_prices(n=2000, **TRUE))
        assert fit.sigma < 1e-6
        for key, val in TRUE.items():
            assert getattr(fit, key) == pytest.approx(val, abs=1e-3)

    def test_second_parameter_set(self):
        truth = dict(c1=-1.3, c2=1.25, alpha=0.5, gamma=2.0)
        fit = fit_rank_curve(synthetic_prices(n=1500, **truth))
        for key, val in truth.items():
            assert getattr(fit, key) == pytest.approx(val, abs=1e-3)

    def test_noisy(self):
        prices = synthetic_prices(n=2000, noise=0.01, rng=np.random.default_rng(4), **TRUE)
        fit = fit_rank_curve(prices)
        assert fit.sigma <= 0.02 and fit.converged

    def test_simplex_descent(self):
        prices = synthetic_prices(n=300, noise=0.02, rng=np.random.default_rng(1), **TRUE)
        x, y = curve_points(build_ranks(prices))
        xs, ys = x / x.max(), y / prices.size
        trace = []

        def record(theta):
            c1, c2, la, lg = theta
            r = c1 / (1 + math.exp(la) * xs ** math.exp(lg)) + c2 - ys
            trace.append(float(np.mean(r**2)))

        fit_rank_curve(prices, alpha_grid=(1.0,), gamma_grid=(1.0,), restarts=1, callback=record)
        assert len(trace) > 10
        assert np.all(np.diff(trace) <= 1e-15)
        assert math.sqrt(trace[-1]) <= 0.02

    def test_normalisation_invariance(self):
        prices = synthetic_prices(n=800, noise=0.01, rng=np.random.default_rng(2), **TRUE)
        a = fit_rank_curve(prices)
        b = fit_rank_curve(prices * 1000.0)
        assert b.sigma == pytest.approx(a.sigma, rel=1e-6)
        assert b.gamma == pytest.approx(a.gamma, rel=1e-6)
        assert b.alpha == pytest.approx(a.alpha * 1000.0 ** (-a.gamma), rel=1e-5)

    def test_too_few_points(self):
        with pytest.raises(FitError):
            fit_rank_curve([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 7.0, 7.0])

    def test_rank_mode(self):
        fit = fit_rank_curve(synthetic_prices(n=400, **TRUE), mode="rank")
        assert fit.mode == "rank" and fit.sigma < 1e-6


class TestTheoretical:
    def test_zero_beta_linear(self):
        sp = CardinalitySpectrum.uniform_grid(6)
        pts = theoretical_rank_from_equilibrium(sp, solve_equilibrium(sp, 12, EnergiaConstraint(12 * sp.mean)))
        np.testing.assert_allclose(pts[:, 1], 2.0 * np.arange(1, 7), rtol=1e-12)
        np.testing.assert_array_equal(pts[:, 0], sp.values)

    def test_single_bin(self):
        sp = CardinalitySpectrum([3.0])
        pts = theoretical_rank_from_equilibrium(sp, solve_equilibrium(sp, 4, EnergiaConstraint(12.0)))
        assert pts.tolist() == [[3.0, 4.0]]
