"""Failure-probability estimators against the lattice oracle and the
closed-form chord scenarios."""

import math

import numpy as np
import pytest

from uavcov.estimator import (
    VerificationConfig,
    estimate_pis,
    estimate_uniform,
    grid_points_in_circle,
    optimal_proposal_check,
    oracle_pf_grid,
)
from uavcov.geometry import Environment, Obstacle
from uavcov.mobility import MobilityCircle
from uavcov.proposal import DefensiveMixture, GaussianMixture2D
from uavcov.rng import STREAM_SAMPLING, substream
from uavcov.scenarios import fitted_mixture, make_wall_scenario, mismatched_mixture

from conftest import make_rng

EMPTY_ENV = Environment(side=1000.0, obstacles=())
CIRCLE = MobilityCircle((400.0, 400.0), 50.0)
UAV = (200.0, 400.0, 100.0)


def full_shadow_scene():
    # UAV below the wall top and the wall spanning every sightline: the
    # entire circle is blocked.
    wall = Obstacle(150.0, 200.0, 160.0, 600.0, 60.0)
    env = Environment(side=1000.0, obstacles=(wall,))
    return env, (50.0, 400.0, 30.0), MobilityCircle((400.0, 400.0), 50.0)


def central_gmm(circle=CIRCLE, sigma_frac=0.4):
    s = sigma_frac * circle.radius
    return GaussianMixture2D(np.array([1.0]),
                             np.array([list(circle.center)]),
                             np.array([[s * s, s * s]]))


class TestUniformEstimator:
    def test_obstacle_free_is_exactly_zero(self):
        est = estimate_uniform(CIRCLE, UAV, EMPTY_ENV, 500, make_rng(1))
        assert est.p_hat == 0.0
        assert est.n_failures_hit == 0
        assert est.quality == 1

    def test_full_shadow_is_exactly_one(self):
        env, uav, circle = full_shadow_scene()
        est = estimate_uniform(circle, uav, env, 500, make_rng(2))
        assert est.p_hat == 1.0
        assert est.quality == 0

    def test_half_shadow_within_3se(self):
        scn = make_wall_scenario(0.5)
        n = 10_000
        est = estimate_uniform(scn.circle, scn.uav_pos, scn.env, n, make_rng(3))
        se = math.sqrt(0.5 * 0.5 / n)
        assert abs(est.p_hat - 0.5) <= 3 * se

    def test_variance_is_closed_form(self):
        scn = make_wall_scenario(0.3)
        est = estimate_uniform(scn.circle, scn.uav_pos, scn.env, 200, make_rng(4))
        assert est.variance_hat == pytest.approx(est.p_hat * (1 - est.p_hat) / 200, rel=1e-12)

    def test_degenerate_circle_returns_center_indicator(self):
        c = MobilityCircle((400.0, 400.0), 0.0)
        est = estimate_uniform(c, UAV, EMPTY_ENV, 100, make_rng(5))
        assert est.p_hat == 0.0
        env, uav, _ = full_shadow_scene()
        est = estimate_uniform(MobilityCircle((400.0, 400.0), 0.0), uav, env, 100, make_rng(5))
        assert est.p_hat == 1.0


class TestPisEstimator:
    def test_alpha_zero_matches_uniform_sample_stream(self):
        scn = make_wall_scenario(0.3)
        mix = DefensiveMixture(0.0, central_gmm(scn.circle), scn.circle)
        cfg = VerificationConfig(n_samples=400, alpha=0.0)
        e_pis = estimate_pis(scn.circle, scn.uav_pos, scn.env, mix, cfg,
                             substream(3, STREAM_SAMPLING, 0))
        e_uni = estimate_uniform(scn.circle, scn.uav_pos, scn.env, 400,
                                 substream(3, STREAM_SAMPLING, 0))
        assert e_pis.p_hat == e_uni.p_hat
        assert e_pis.n_failures_hit == e_uni.n_failures_hit
        assert e_pis.max_weight_seen == pytest.approx(1.0, rel=1e-12)

    def test_obstacle_free_zero_for_any_alpha(self):
        for alpha in (0.0, 0.3, 0.9):
            mix = DefensiveMixture(alpha, central_gmm(), CIRCLE)
            cfg = VerificationConfig(n_samples=200, alpha=alpha)
            est = estimate_pis(CIRCLE, UAV, EMPTY_ENV, mix, cfg, make_rng(6))
            assert est.p_hat == 0.0
            assert est.quality == 1

    def test_unbiased_against_chord_value(self):
        # distribution mean over replicates approaches the analytic fraction
        scn = make_wall_scenario(0.3)
        mix, ok = fitted_mixture(scn, 0.6)
        assert ok
        cfg = VerificationConfig(n_samples=100, alpha=0.6)
        reps = 300
        vals = np.empty(reps)
        for i in range(reps):
            vals[i] = estimate_pis(scn.circle, scn.uav_pos, scn.env, mix, cfg,
                                   substream(11, STREAM_SAMPLING, 0, i)).p_hat
        se = vals.std(ddof=1) / math.sqrt(reps)
        assert abs(vals.mean() - scn.p_f) <= 4 * se

    def test_unbiased_under_mismatched_prediction(self):
        scn = make_wall_scenario(0.3)
        mix = mismatched_mixture(scn, 0.6)
        cfg = VerificationConfig(n_samples=100, alpha=0.6)
        reps = 400
        vals = np.empty(reps)
        for i in range(reps):
            vals[i] = estimate_pis(scn.circle, scn.uav_pos, scn.env, mix, cfg,
                                   substream(12, STREAM_SAMPLING, 0, i)).p_hat
        se = vals.std(ddof=1) / math.sqrt(reps)
        assert abs(vals.mean() - scn.p_f) <= 4 * se

    def test_weight_bound_paper_faithful(self):
        rng = make_rng(7)
        scn = make_wall_scenario(0.5)
        for alpha in (0.3, 0.6, 0.9):
            gmm = central_gmm(scn.circle, sigma_frac=0.2)
            mix = DefensiveMixture(alpha, gmm, scn.circle, renormalize=False)
            cfg = VerificationConfig(n_samples=300, alpha=alpha,
                                     density_mode="paper_faithful")
            est = estimate_pis(scn.circle, scn.uav_pos, scn.env, mix, cfg, rng)
            assert est.max_weight_seen <= 1.0 / (1.0 - alpha) + 1e-6

    def test_weight_bound_renormalized(self):
        rng = make_rng(8)
        scn = make_wall_scenario(0.5)
        for alpha in (0.3, 0.6, 0.9):
            gmm = central_gmm(scn.circle, sigma_frac=0.2)
            mix = DefensiveMixture(alpha, gmm, scn.circle, renormalize=True)
            cfg = VerificationConfig(n_samples=300, alpha=alpha)
            est = estimate_pis(scn.circle, scn.uav_pos, scn.env, mix, cfg, rng)
            assert est.max_weight_seen <= mix.normalizer / (1.0 - alpha) + 1e-6

    def test_p_hat_bounded_by_max_weight(self):
        rng = make_rng(9)
        scn = make_wall_scenario(0.8)
        mix = mismatched_mixture(scn, 0.9)
        cfg = VerificationConfig(n_samples=100, alpha=0.9)
        for i in range(20):
            est = estimate_pis(scn.circle, scn.uav_pos, scn.env, mix, cfg,
                               substream(13, STREAM_SAMPLING, 0, i))
            assert 0.0 <= est.p_hat <= est.max_weight_seen + 1e-12

    def test_deterministic_given_stream(self):
        scn = make_wall_scenario(0.3)
        mix, _ = fitted_mixture(scn, 0.6)
        cfg = VerificationConfig(n_samples=150, alpha=0.6)
        a = estimate_pis(scn.circle, scn.uav_pos, scn.env, mix, cfg,
                         substream(21, STREAM_SAMPLING, 5))
        b = estimate_pis(scn.circle, scn.uav_pos, scn.env, mix, cfg,
                         substream(21, STREAM_SAMPLING, 5))
        assert a.stat_fields() == b.stat_fields()

    def test_quality_thresholding(self):
        scn = make_wall_scenario(0.3)
        mix, _ = fitted_mixture(scn, 0.6)
        cfg = VerificationConfig(n_samples=100, alpha=0.6, epsilon=0.5)
        est = estimate_pis(scn.circle, scn.uav_pos, scn.env, mix, cfg, make_rng(10))
        assert est.quality == int(est.p_hat < 0.5)


class TestGridOracle:
    def test_no_obstacles_zero(self):
        assert oracle_pf_grid(CIRCLE, UAV, EMPTY_ENV) == 0.0

    def test_full_shadow_one(self):
        env, uav, circle = full_shadow_scene()
        assert oracle_pf_grid(circle, uav, env) == 1.0

    def test_half_plane_through_center(self):
        scn = make_wall_scenario(0.5)
        pf = oracle_pf_grid(scn.circle, scn.uav_pos, scn.env)
        n = len(grid_points_in_circle(scn.circle, scn.circle.radius / 200.0))
        assert abs(pf - 0.5) <= 2.0 / math.sqrt(n)

    def test_matches_chord_formula_across_targets(self):
        for target in (0.05, 0.1, 0.3, 0.5, 0.8):
            scn = make_wall_scenario(target)
            pf = oracle_pf_grid(scn.circle, scn.uav_pos, scn.env)
            assert pf == pytest.approx(target, abs=0.004)

    def test_lattice_covers_circle_area(self):
        pts = grid_points_in_circle(CIRCLE, CIRCLE.radius / 100.0)
        cell = (2 * CIRCLE.radius / 200.0) ** 2
        assert pts.shape[0] * cell == pytest.approx(CIRCLE.area, rel=0.01)

    def test_degenerate_circle(self):
        env, uav, _ = full_shadow_scene()
        assert oracle_pf_grid(MobilityCircle((400.0, 400.0), 0.0), uav, env) == 1.0
        assert oracle_pf_grid(MobilityCircle((400.0, 400.0), 0.0), UAV, EMPTY_ENV) == 0.0


class TestOptimalProposal:
    def test_zero_failure_scenario_skipped(self):
        res = optimal_proposal_check(CIRCLE, UAV, EMPTY_ENV)
        assert res["skipped"]

    def test_full_failure_scenario_skipped(self):
        env, uav, circle = full_shadow_scene()
        assert optimal_proposal_check(circle, uav, env)["skipped"]

    def test_near_zero_variance_and_constant_weight(self):
        scn = make_wall_scenario(0.3)
        res = optimal_proposal_check(scn.circle, scn.uav_pos, scn.env,
                                     n_samples=1000, n_runs=60, seed=3)
        assert not res["skipped"]
        # per-hit weight is the constant failure mass of the proposal cells
        assert res["weight"] == pytest.approx(res["p_f"], rel=0.02)
        assert abs(res["mean"] - res["p_f"]) <= 0.05 * res["p_f"]
        assert (np.abs(res["estimates"] - res["p_f"]) <= 0.05 * res["p_f"]).all()
        assert res["variance"] <= 1e-3 * res["p_f"] ** 2
