"""Reward components: exact arithmetic cases and range/monotonicity
properties."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uavcov.channel import ChannelParams, LinkState, snr_linear, throughput_bps
from uavcov.errors import ConfigError
from uavcov.rewards import (
    RewardWeights,
    aggregate_reward,
    jain_index,
    phi_collision,
    phi_coverage,
    phi_energy,
    phi_load_balance,
    phi_throughput,
)

P = ChannelParams()
H_MIN = 22.0
EPS = 1e-9


class TestPhiThroughput:
    def test_no_served_users(self):
        assert phi_throughput([], 10, P, H_MIN) == 0.0

    def test_all_users_at_best_case_saturates(self):
        best = throughput_bps(LinkState(H_MIN, True, 1.0), P)
        assert phi_throughput([best] * 7, 7, P, H_MIN) == pytest.approx(1.0, abs=EPS)

    def test_one_user_at_twice_min_altitude(self):
        # direct evaluation through the link equations
        n = 4
        rate = throughput_bps(LinkState(2 * H_MIN, True, 1.0), P)
        best = throughput_bps(LinkState(H_MIN, True, 1.0), P)
        expected = rate / (n * best)
        assert phi_throughput([rate], n, P, H_MIN) == pytest.approx(expected, abs=EPS)


class TestPhiCoverage:
    def test_all_covered(self):
        assert phi_coverage([1, 1, 1]) == pytest.approx(1.0, abs=EPS)

    def test_none_covered(self):
        assert phi_coverage([0, 0, 0, 0]) == pytest.approx(0.0, abs=EPS)

    def test_weighted_two_thirds(self):
        assert phi_coverage([1, 0], [2.0, 1.0]) == pytest.approx(2.0 / 3.0, abs=EPS)

    def test_empty_set_raises(self):
        with pytest.raises(ValueError, match="empty"):
            phi_coverage([])


class TestPhiLoadBalance:
    def test_equal_counts_near_one(self):
        val = phi_load_balance([5, 5, 5])
        assert val == pytest.approx(5.0 / (5.0 + 1e-6), abs=EPS)

    def test_two_uavs_total_imbalance(self):
        # population std of {10, 0} equals the mean, so the score is 0
        assert phi_load_balance([10, 0]) == pytest.approx(0.0, abs=EPS)

    def test_all_zero_counts(self):
        assert phi_load_balance([0, 0, 0]) == 0.0

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            phi_load_balance([])


class TestPhiEnergy:
    V_MAX, DT = 30.0, 10.0

    def test_all_stationary(self):
        assert phi_energy([0.0, 0.0, 0.0], self.V_MAX, self.DT) == pytest.approx(1.0, abs=EPS)

    def test_all_at_max(self):
        d = self.V_MAX * self.DT
        assert phi_energy([d, d], self.V_MAX, self.DT) == pytest.approx(0.0, abs=EPS)

    def test_half_total(self):
        d = self.V_MAX * self.DT
        assert phi_energy([d, 0.0], self.V_MAX, self.DT) == pytest.approx(0.5, abs=EPS)

    def test_identity_with_displacement_fraction(self):
        vals = [120.0, 60.0, 250.0]
        frac = sum(vals) / (3 * self.V_MAX * self.DT)
        assert phi_energy(vals, self.V_MAX, self.DT) + frac == pytest.approx(1.0, abs=EPS)

    def test_rejects_overspeed_displacement(self):
        with pytest.raises(ValueError):
            phi_energy([self.V_MAX * self.DT + 1.0], self.V_MAX, self.DT)


class TestPhiCollision:
    def test_pairs_at_shift_distance(self):
        assert phi_collision([100.0, 100.0], d_shift=100.0) == pytest.approx(1.0, abs=EPS)

    def test_half_at_log_two_offset(self):
        d = 100.0 + 50.0 * math.log(2.0)
        assert phi_collision([d], d_shift=100.0, k_scale=50.0) == pytest.approx(0.5, abs=EPS)

    def test_vanishes_at_large_distance(self):
        assert phi_collision([1e7], d_shift=100.0, k_scale=50.0) < 1e-12

    def test_no_pairs_is_zero(self):
        assert phi_collision([]) == 0.0


class TestAggregateReward:
    W = RewardWeights()

    def test_all_zero(self):
        assert aggregate_reward(0, 0, 0, 0, 0, self.W).total == pytest.approx(0.0, abs=EPS)

    def test_one_hot_throughput(self):
        w = RewardWeights(1.0, 0.0, 0.0, 0.0, 0.0)
        assert aggregate_reward(0.37, 1, 1, 1, 1, w).total == pytest.approx(0.37, abs=EPS)

    def test_uniform_weights_with_zero_collision(self):
        assert aggregate_reward(1, 1, 1, 1, 0, self.W).total == pytest.approx(0.8, abs=EPS)

    def test_collision_term_subtracts(self):
        base = aggregate_reward(1, 1, 1, 1, 0, self.W).total
        worse = aggregate_reward(1, 1, 1, 1, 1, self.W).total
        assert worse == pytest.approx(base - 0.2, abs=EPS)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
    def test_monotone_in_components(self, a, b, c, d, e):
        lo = aggregate_reward(a, b, c, d, e, self.W).total
        assert aggregate_reward(min(a + 0.1, 1.0), b, c, d, e, self.W).total >= lo - EPS
        assert aggregate_reward(a, b, c, d, min(e + 0.1, 1.0), self.W).total <= lo + EPS

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ConfigError):
            RewardWeights(0.5, 0.2, 0.2, 0.2, 0.2)
        with pytest.raises(ConfigError):
            RewardWeights(-0.2, 0.4, 0.2, 0.4, 0.2)


class TestJainIndex:
    def test_equal_values(self):
        assert jain_index([3.0, 3.0, 3.0]) == pytest.approx(1.0, abs=EPS)

    def test_single_winner(self):
        assert jain_index([7.0, 0.0, 0.0, 0.0]) == pytest.approx(0.25, abs=EPS)

    def test_one_two_three(self):
        assert jain_index([1.0, 2.0, 3.0]) == pytest.approx(36.0 / 42.0, abs=EPS)

    def test_all_zero_raises(self):
        with pytest.raises(ValueError):
            jain_index([0.0, 0.0])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0.01, 1e6), min_size=1, max_size=30))
    def test_range(self, values):
        j = jain_index(values)
        assert 1.0 / len(values) - EPS <= j <= 1.0 + EPS


class TestRanges:
    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.integers(0, 500), min_size=1, max_size=12))
    def test_load_balance_in_unit_interval(self, counts):
        assert 0.0 <= phi_load_balance(counts) <= 1.0

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0, 1e5), min_size=1, max_size=10))
    def test_collision_in_unit_interval(self, dists):
        assert 0.0 <= phi_collision(dists) <= 1.0
