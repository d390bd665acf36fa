import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from secrecy_lab import SizeGuardError, ValidationError
from secrecy_lab.ballbins import (
    OccupancyParams,
    distinct_pmf,
    expected_distinct,
    occupancy_fraction_trend,
    occupancy_stats,
    simulate_distinct,
    theorem1_condition,
    variance_distinct,
)

from oracles import enumerate_occupancy, occupancy_law_exact, occupancy_moments_exact


class TestParams:
    @pytest.mark.parametrize("t,s", [(0, 3), (-1, 1), (2, -1)])
    def test_invalid(self, t, s):
        with pytest.raises(ValidationError):
            OccupancyParams(t, s)

    def test_t_zero_rejected_by_closed_forms(self):
        with pytest.raises(ValidationError):
            expected_distinct(0, 3)
        with pytest.raises(ValidationError):
            variance_distinct(0, 3)


class TestClosedForms:
    @pytest.mark.parametrize("t,s,mean", [(1, 5, 1.0), (2, 2, 1.5), (2, 1, 1.0), (3, 2, 5 / 3), (4, 2, 1.75), (4, 3, 37 / 16)])
    def test_mean_examples(self, t, s, mean):
        assert expected_distinct(OccupancyParams(t, s)) == pytest.approx(mean, abs=1e-12)

    @pytest.mark.parametrize("t,s,var", [(2, 1, 0.0), (2, 2, 0.25), (3, 2, 2 / 9), (4, 2, 3 / 16), (4, 3, 87 / 256)])
    def test_variance_examples(self, t, s, var):
        assert variance_distinct(t, s) == pytest.approx(var, abs=1e-12)

    def test_stats_bundle(self):
        st_ = occupancy_stats(4, 2)
        assert st_.mean_fraction == pytest.approx(1.75 / 4)

    @pytest.mark.parametrize("t,s", [(2, 6), (5, 4), (7, 3), (13, 2), (3, 9)])
    def test_against_literal_enumeration(self, t, s):
        mean, var = enumerate_occupancy(t, s)
        assert expected_distinct(t, s) == pytest.approx(mean, abs=1e-9)
        assert variance_distinct(t, s) == pytest.approx(var, abs=1e-9)

    @settings(max_examples=150)
    @given(st.integers(1, 400), st.integers(0, 400))
    def test_against_exact_counting(self, t, s):
        mean, var = occupancy_moments_exact(t, s)
        assert expected_distinct(t, s) == pytest.approx(float(mean), rel=1e-9, abs=1e-9)
        assert variance_distinct(t, s) == pytest.approx(float(var), rel=1e-7, abs=1e-9)

    @given(st.integers(1, 10**6), st.integers(0, 10**6))
    def test_mean_bounded(self, t, s):
        m = expected_distinct(t, s)
        assert 0 <= m <= min(t, s) + 1e-9
        assert variance_distinct(t, s) >= 0

    @given(st.integers(2, 10**6), st.integers(2, 10**6))
    def test_mean_strictly_below_s(self, t, s):
        if s <= t:
            assert expected_distinct(t, s) < s

    @pytest.mark.parametrize("t", [2**10, 2**14, 2**20])
    def test_ratio_limits(self, t):
        assert expected_distinct(t, t * 2**10) / t == pytest.approx(1.0, abs=1e-3)
        s = t // 2**10
        assert expected_distinct(t, s) / t == pytest.approx(s / t, abs=1e-3)

    def test_huge_values_stable(self):
        m = expected_distinct(2**40, 2**40)
        assert m / 2**40 == pytest.approx(1 - math.exp(-1), rel=1e-9)
        assert variance_distinct(2**40, 2**40) > 0


class TestDistinctPmf:
    @pytest.mark.parametrize("t,s", [(1, 0), (1, 4), (4, 0), (4, 3), (6, 10), (30, 7)])
    def test_matches_exact_law(self, t, s):
        exact = occupancy_law_exact(t, s) if s else [1.0]
        np.testing.assert_allclose(distinct_pmf(t, s), [float(p) for p in exact], atol=1e-12)

    @given(st.integers(1, 60), st.integers(0, 60))
    def test_moments_match_closed_forms(self, t, s):
        law = distinct_pmf(t, s)
        k = np.arange(law.size)
        assert law.sum() == pytest.approx(1.0)
        mean = (k * law).sum()
        assert mean == pytest.approx(expected_distinct(t, s), abs=1e-9)
        assert (k * k * law).sum() - mean**2 == pytest.approx(variance_distinct(t, s), abs=1e-8)


class TestSimulation:
    def test_single_bin(self):
        res = simulate_distinct(OccupancyParams(1, 17), trials=1000, seed=3)
        assert res.mean == 1.0 and res.variance == 0.0

    def test_t2_s2_band(self):
        res = simulate_distinct(OccupancyParams(2, 2), trials=10**6, seed=11)
        assert abs(res.mean - 1.5) <= 3 * math.sqrt(0.25 / 10**6)

    def test_t16_s64(self):
        res = simulate_distinct(OccupancyParams(16, 64), trials=10**5, seed=12)
        se = math.sqrt(variance_distinct(16, 64) / 10**5)
        assert abs(res.mean - expected_distinct(16, 64)) <= 4 * se

    def test_deterministic(self):
        a = simulate_distinct(OccupancyParams(7, 30), trials=5000, seed=99)
        b = simulate_distinct(OccupancyParams(7, 30), trials=5000, seed=99)
        assert a == b

    def test_worker_count_does_not_change_result(self, monkeypatch):
        p = OccupancyParams(4, 2**20)
        monkeypatch.setenv("SECRECY_LAB_THREADS", "1")
        a = simulate_distinct(p, trials=40, seed=5)
        monkeypatch.setenv("SECRECY_LAB_THREADS", "4")
        assert simulate_distinct(p, trials=40, seed=5) == a

    def test_zero_balls(self):
        assert simulate_distinct(OccupancyParams(5, 0), trials=10, seed=0).mean == 0.0

    def test_bad_trials(self):
        with pytest.raises(ValidationError):
            simulate_distinct(OccupancyParams(2, 2), trials=0, seed=0)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(1, 256), st.integers(1, 1024), st.integers(0, 2**31))
    def test_within_five_standard_errors(self, t, s, seed):
        res = simulate_distinct(OccupancyParams(t, s), trials=20000, seed=seed)
        se = math.sqrt(variance_distinct(t, s) / 20000)
        assert abs(res.mean - expected_distinct(t, s)) <= 5 * se + 1e-12


class TestTheorem1Condition:
    @pytest.mark.parametrize("args,expected", [((0.5, 0.5, 0.3, 0.3), True), ((0.2, 0.5, 0.3, 0.3), False), ((0.3, 0.3, 0.3, 0.3), False)])
    def test_examples(self, args, expected):
        assert theorem1_condition(*args) is expected

    def test_negative_rate(self):
        with pytest.raises(ValidationError):
            theorem1_condition(0.5, -0.1, 0.2, 0.2)


class TestFractionTrend:
    def test_tends_to_one(self):
        fr = [f for _, f in occupancy_fraction_trend(0.3, 0.5, [10, 20, 30])]
        assert fr[0] < fr[1] < fr[2]
        assert fr[2] > 1 - 1e-6

    def test_tends_to_zero(self):
        fr = [f for _, f in occupancy_fraction_trend(0.5, 0.3, [10, 20, 30])]
        assert fr[0] > fr[1] > fr[2]
        assert fr[2] < 0.02

    def test_equal_rates(self):
        (_, f), = occupancy_fraction_trend(0.5, 0.5, [20])
        assert f == pytest.approx(1 - math.exp(-1), abs=1e-3)

    def test_guard(self):
        with pytest.raises(SizeGuardError):
            occupancy_fraction_trend(0.5, 1.0, [31])

    def test_negative(self):
        with pytest.raises(ValidationError):
            occupancy_fraction_trend(-0.1, 1.0, [4])
