"""Weighted query spaces: costs, the normalized gap, brute-force
sensitivity, and the sample-size formula."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corekit import metric
from corekit.points import dense
from corekit.weighted import (
    QuerySpec,
    WeightedSet,
    bar_cost,
    brute_sensitivity,
    default_candidates,
    nu_distance,
    sample_size,
)
from conftest import line


KM = metric.kmeans()


class TestBarCost:
    def test_pair_against_origin(self, two_points):
        assert bar_cost(KM, two_points, [dense(9, [0.0])]) == 1.0

    def test_three_one_against_origin(self, three_one):
        assert bar_cost(KM, three_one, [dense(9, [0.0])]) == 1.0

    def test_centers_covering_input_cost_zero(self, three_one):
        centers = [dense(90, [0.0]), dense(91, [1.0])]
        assert bar_cost(KM, three_one, centers) == 0.0

    def test_weights_scale_linearly(self):
        P = line([0.0, 2.0], weights=[1.0, 3.0])
        assert bar_cost(KM, P, [dense(9, [0.0])]) == 12.0


class TestNuDistance:
    def test_equal_inputs(self):
        assert nu_distance(7.0, 7.0, 0.25) == 0.0

    def test_direct_formula(self):
        assert nu_distance(1.0, 0.0, 0.25) == pytest.approx(0.8)

    def test_scaling_identity_pinned(self):
        # scaling both arguments by t matches shrinking nu by t
        assert nu_distance(2.0, 0.0, 1.0) == pytest.approx(2.0 / 3.0)
        assert nu_distance(1.0, 0.0, 0.5) == pytest.approx(2.0 / 3.0)

    @given(a=st.floats(0, 100), b=st.floats(0, 100),
           nu=st.floats(0.01, 10), t=st.floats(0.1, 50))
    @settings(max_examples=100, deadline=None)
    def test_scaling_identity(self, a, b, nu, t):
        lhs = nu_distance(t * a, t * b, nu)
        rhs = nu_distance(a, b, nu / t)
        assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            nu_distance(-1.0, 0.0, 0.5)
        with pytest.raises(ValueError):
            nu_distance(0.0, 0.0, 0.0)

    def test_stays_below_one(self):
        assert nu_distance(1e6, 0.0, 1e-2) < 1.0


def _grid_queries(lo=-10.0, hi=10.0, step=1e-3):
    axis = np.arange(lo, hi + step / 2, step)
    return [[dense(10_000 + i, [c])] for i, c in enumerate(axis)]


class TestBruteSensitivity:
    # dense 1-d grid stands in for the continuum; max of c^2/(c^2+(1-c)^2)
    # over the grid is attained at c=1

    def test_antipodal_pair(self, two_points):
        prof = brute_sensitivity(KM, two_points, 1, _grid_queries())
        assert prof.s[0] == pytest.approx(1.0, abs=1e-3)
        assert prof.s[1] == pytest.approx(1.0, abs=1e-3)
        assert prof.s.sum() == pytest.approx(2.0, abs=1e-2)

    def test_three_against_one(self, three_one):
        prof = brute_sensitivity(KM, three_one, 1, _grid_queries())
        for i in range(3):
            assert prof.s[i] == pytest.approx(1.0 / 3.0, abs=1e-3)
        assert prof.s[3] == pytest.approx(1.0, abs=1e-3)

    def test_single_point(self):
        P = line([4.0])
        prof = brute_sensitivity(KM, P, 1, [[dense(9, [0.0])]])
        assert prof.s[0] == 1.0

    def test_all_degenerate_queries_rejected(self):
        P = line([2.0])
        with pytest.raises(ValueError):
            brute_sensitivity(KM, P, 1, [[dense(9, [2.0])]])

    def test_oversized_query_rejected(self, two_points):
        q = [dense(8, [0.0]), dense(9, [1.0])]
        with pytest.raises(ValueError):
            brute_sensitivity(KM, two_points, 1, [q])

    def test_default_candidates_cover_subsets(self, three_one):
        cands = default_candidates(KM, three_one, 1, seed=0)
        assert len(cands) > 0
        prof = brute_sensitivity(KM, three_one, 1, cands)
        assert prof.s.max() <= 1.0 + 1e-12


class TestSampleSize:
    def test_pinned_value(self):
        got = sample_size(10.0, QuerySpec(k=10, d_q=1.0), 0.5, 0.5, c_const=1.0)
        assert got == 949

    def test_doubling_t_at_least_doubles(self):
        q = QuerySpec(k=2, d_q=3.0)
        for t in (3.0, 5.0, 17.0, 80.0):
            assert sample_size(2 * t, q, 0.3, 0.1) >= 2 * sample_size(t, q, 0.3, 0.1)

    def test_rejects_eps_one(self):
        with pytest.raises(ValueError):
            sample_size(10.0, QuerySpec(k=1, d_q=1.0), 1.0, 0.5)

    def test_rejects_nonpositive_t(self):
        with pytest.raises(ValueError):
            sample_size(0.0, QuerySpec(k=1, d_q=1.0), 0.5, 0.5)

    def test_alt_formula_runs(self):
        q = QuerySpec(k=4, d_q=2.0)
        main = sample_size(10.0, q, 0.25, 0.1, formula="main")
        alt = sample_size(10.0, q, 0.25, 0.1, formula="alt", beta=2.0)
        assert main >= 1 and alt >= 1
        with pytest.raises(ValueError):
            sample_size(10.0, q, 0.25, 0.1, formula="other")

    def test_log_clamp_below_one(self):
        # t <= 1 uses log 2, so the size is still positive and finite
        assert sample_size(0.5, QuerySpec(k=1, d_q=1.0), 0.5, 0.5) >= 1


class TestWeightedSet:
    def test_total_weight(self, three_one):
        assert three_one.total_weight == 4.0

    def test_rejects_mismatched_lengths(self):
        with pytest.raises(ValueError):
            WeightedSet([dense(0, [0.0])], np.ones(2))

    def test_rejects_negative_weights(self):
        with pytest.raises(ValueError):
            WeightedSet([dense(0, [0.0])], np.array([-1.0]))
