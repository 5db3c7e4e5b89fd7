import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rankdist.core import (
    CardinalitySpectrum,
    Composition,
    Direction,
    EnergiaConstraint,
    energia_of,
    excess_factor,
    excess_minimizer,
    satisfies,
    user_cardinality_transform,
)
from rankdist.errors import DimensionError, DomainError

W123 = CardinalitySpectrum([1.0, 2.0, 3.0])


class TestSpectrum:
    def test_sorted_and_cached_mean(self):
        sp = CardinalitySpectrum([3.0, 1.0, 2.0])
        assert sp.values.tolist() == [1.0, 2.0, 3.0]
        assert sp.s == 3 and sp.w_max == 3.0 and sp.w_min == 1.0
        assert sp.mean == 2.0

    def test_immutable(self):
        with pytest.raises(ValueError):
            W123.values[0] = 5.0

    @pytest.mark.parametrize("bad", [[], [1.0, 0.0], [1.0, -2.0], [np.inf], [np.nan]])
    def test_rejects_invalid(self, bad):
        with pytest.raises(DomainError):
            CardinalitySpectrum(bad)

    def test_ties_keep_input_order(self):
        # stable sort: equal values are indistinguishable, but the permutation is stable
        raw = np.array([2.0, 1.0, 2.0, 1.0])
        assert np.argsort(raw, kind="stable").tolist() == [1, 3, 0, 2]
        assert CardinalitySpectrum(raw).values.tolist() == [1.0, 1.0, 2.0, 2.0]

    @given(st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=50))
    def test_mean_matches_arithmetic_mean(self, vals):
        sp = CardinalitySpectrum(vals)
        assert sp.mean == pytest.approx(np.mean(vals), rel=1e-12)
        assert np.all(np.diff(sp.values) >= 0)


class TestComposition:
    def test_total_and_cumulative(self):
        c = Composition([1, 0, 3])
        assert c.total == 4
        assert c.cumulative().tolist() == [1, 1, 4]
        assert c.cumulative_probability()[-1] == 1.0

    def test_mismatched_total(self):
        with pytest.raises(DomainError):
            Composition([1, 2], total=4)

    @pytest.mark.parametrize("bad", [[-1, 3], [0.5, 1]])
    def test_rejects_bad_counts(self, bad):
        with pytest.raises(DomainError):
            Composition(bad)

    @given(st.lists(st.integers(0, 50), min_size=1, max_size=20).filter(lambda c: sum(c) > 0))
    def test_cumulative_monotone_ending_at_total(self, counts):
        b = Composition(counts).cumulative()
        assert np.all(np.diff(b) >= 0)
        assert b[-1] == sum(counts)


class TestEnergia:
    @pytest.mark.parametrize(
        "counts, expected",
        [([0, 0, 4], 12.0), ([1, 1, 2], 9.0), ([0, 3, 1], 9.0)],
    )
    def test_examples(self, counts, expected):
        assert energia_of(Composition(counts), W123) == expected
        # integer-arithmetic oracle
        assert sum(c * w for c, w in zip(counts, (1, 2, 3))) == expected

    def test_dimension_error(self):
        with pytest.raises(DimensionError):
            energia_of(Composition([1, 1]), W123)

    @settings(max_examples=60)
    @given(
        st.lists(st.integers(0, 30), min_size=5, max_size=5),
        st.lists(st.integers(0, 30), min_size=5, max_size=5),
        st.lists(st.floats(0.01, 100), min_size=5, max_size=5),
    )
    def test_linear(self, a, b, w):
        if sum(a) == 0 or sum(b) == 0:
            return
        sp = CardinalitySpectrum(w)
        ca, cb = Composition(a), Composition(b)
        lhs = energia_of(ca + cb, sp)
        assert lhs == pytest.approx(energia_of(ca, sp) + energia_of(cb, sp), rel=1e-12)

    @settings(max_examples=60)
    @given(st.lists(st.integers(0, 10**6), min_size=1, max_size=30),
           st.lists(st.floats(1e-3, 1e3), min_size=30, max_size=30))
    def test_compensated_sum_matches_exact_rational(self, counts, w):
        if sum(counts) == 0:
            return
        sp = CardinalitySpectrum(w[: len(counts)])
        exact = sum(Fraction(c) * Fraction(x) for c, x in zip(counts, sp.values.tolist()))
        assert energia_of(counts, sp) == pytest.approx(float(exact), rel=1e-12)


class TestSatisfies:
    def test_examples(self):
        assert not satisfies(Composition([2, 0, 2]), W123, EnergiaConstraint(9, Direction.AT_LEAST))
        assert satisfies(Composition([0, 0, 4]), W123, EnergiaConstraint(9, Direction.AT_LEAST))
        assert satisfies(Composition([4, 0, 0]), W123, EnergiaConstraint(9, Direction.AT_MOST))

    def test_hand_enumeration(self):
        # energia of (a, b, c) with a+b+c=4 is 4 + b + 2c
        feasible = {
            comp for comp in itertools.product(range(5), repeat=3)
            if sum(comp) == 4 and 4 + comp[1] + 2 * comp[2] >= 9
        }
        got = {
            comp for comp in itertools.product(range(5), repeat=3)
            if sum(comp) == 4 and satisfies(comp, W123, EnergiaConstraint(9), n=4)
        }
        assert got == feasible and len(got) == 6

    def test_wrong_total(self):
        assert not satisfies([0, 0, 4], W123, EnergiaConstraint(9), n=5)


class TestConstraint:
    def test_admissibility_branches(self):
        assert EnergiaConstraint(9, "at_least").admissible(W123, 4)
        assert not EnergiaConstraint(7, "at_least").admissible(W123, 4)
        assert not EnergiaConstraint(13, "at_least").admissible(W123, 4)
        assert EnergiaConstraint(7, "at_most").admissible(W123, 4)
        assert not EnergiaConstraint(8, "at_most").admissible(W123, 4)

    def test_expectation_bookkeeping(self):
        c = EnergiaConstraint.from_expectation(2.25, 4)
        assert c.energia == 9.0 and c.expectation(4) == 2.25

    def test_direction_parse(self):
        assert Direction.parse("AT_MOST") is Direction.AT_MOST
        assert Direction.parse("at-least") is Direction.AT_LEAST
        with pytest.raises(ValueError):
            Direction.parse("sideways")


class TestUserTransform:
    def test_examples(self):
        assert user_cardinality_transform(1.0, 1.0, 1.0) == 3.0
        assert user_cardinality_transform(2.0, 1.0, 1.0) == 7.0

    def test_minimizer_by_grid_scan(self):
        grid = np.linspace(0.01, 3.0, 299_001)
        best = grid[np.argmin(excess_factor(grid, 4.0, 2.0))]
        assert best == pytest.approx(0.5, abs=1e-4)
        assert excess_minimizer(4.0, 2.0) == 0.5

    @pytest.mark.parametrize("alpha, gamma", [(4.0, 2.0), (0.3, 0.7), (2.0, 1.5)])
    def test_amgm_bound(self, alpha, gamma):
        w0 = excess_minimizer(alpha, gamma)
        assert user_cardinality_transform(w0, alpha, gamma) == pytest.approx(3 * w0, rel=1e-12)
        grid = np.concatenate([np.linspace(0.05, 0.99, 50), np.linspace(1.01, 3, 50)]) * w0
        assert np.all(user_cardinality_transform(grid, alpha, gamma) > 3 * grid)

    def test_excess_grows_toward_zero(self):
        grid = np.geomspace(0.5, 1e-4, 200)  # decreasing, below the minimizer of (1, 1)
        assert np.all(np.diff(excess_factor(grid, 1.0, 1.0)) > 0)

    @pytest.mark.parametrize("w", [0.0, -1.0])
    def test_domain(self, w):
        with pytest.raises(DomainError):
            user_cardinality_transform(w, 1.0, 1.0)

    def test_bad_shape_params(self):
        with pytest.raises(DomainError):
            user_cardinality_transform(1.0, 0.0, 1.0)
        assert math.isfinite(user_cardinality_transform(1e-3, 1.0, 1.0))
