"""User/UAV stepping, boundary handling and mobility circles."""

import math

import numpy as np
import pytest

from uavcov.errors import ConfigError
from uavcov.mobility import (
    EMBB,
    URLLC,
    MobilityCircle,
    UavState,
    UserState,
    mobility_circle,
    step_uav,
    step_user,
)

from conftest import make_rng

SIDE = 1000.0


def user(pos=(500.0, 500.0), vel=(1.0, 0.0), v_max=15.0, hist_len=8):
    return UserState(pos, vel, v_max, URLLC, history_len=hist_len)


class TestStepUser:
    def test_zero_velocity_stays_put(self):
        u = user(vel=(0.0, 0.0))
        u2 = step_user(u, 10.0, SIDE, make_rng(0))
        assert u2.position == u.position

    def test_boundary_reflection(self):
        u = user(pos=(1.0, 500.0), vel=(-1.0, 0.0))
        u2 = step_user(u, 10.0, SIDE, make_rng(0), heading_sigma_rad=0.0)
        assert u2.position == pytest.approx((9.0, 500.0))
        assert u2.velocity == pytest.approx((1.0, 0.0))

    def test_speed_preserved_and_capped(self):
        rng = make_rng(1)
        u = user(vel=(3.0, 4.0))
        for _ in range(200):
            u = step_user(u, 10.0, SIDE, rng)
            assert u.speed <= u.v_max + 1e-9
            assert u.speed == pytest.approx(5.0, abs=1e-9)

    def test_stays_in_area(self):
        rng = make_rng(2)
        u = user(pos=(10.0, 990.0), vel=(10.0, 10.0))
        for _ in range(500):
            u = step_user(u, 10.0, SIDE, rng)
            assert 0.0 <= u.position[0] <= SIDE
            assert 0.0 <= u.position[1] <= SIDE

    def test_history_ring_buffer(self):
        rng = make_rng(3)
        u = user(hist_len=5)
        for steps in range(1, 12):
            u = step_user(u, 10.0, SIDE, rng)
            assert len(u.history) == min(steps, 5)
        # newest entry last: equals the velocity applied on the final step
        u_prev = u
        u = step_user(u, 10.0, SIDE, rng)
        assert u.history[-1] == pytest.approx(u_prev.velocity)

    def test_zero_heading_noise_is_straight(self):
        u = user(pos=(100.0, 100.0), vel=(2.0, 1.0))
        u2 = step_user(u, 10.0, SIDE, make_rng(4), heading_sigma_rad=0.0)
        assert u2.position == pytest.approx((120.0, 110.0))
        assert u2.velocity == pytest.approx((2.0, 1.0))


class TestStepUav:
    def test_zero_action_is_identity(self):
        s = UavState((100.0, 100.0, 80.0), v_max=30.0)
        assert step_uav(s, (0, 0, 0), 10.0, SIDE, 22.0, 150.0).position == s.position

    def test_overspeed_command_is_scaled(self):
        # Commanded 60 m/s with a 30 m/s cap: displacement halves.
        s = UavState((100.0, 100.0, 80.0), v_max=30.0)
        s2 = step_uav(s, (600.0, 0.0, 0.0), 10.0, SIDE, 22.0, 150.0)
        assert s2.position == pytest.approx((400.0, 100.0, 80.0))

    def test_altitude_clamped(self):
        s = UavState((100.0, 100.0, 30.0), v_max=30.0)
        s2 = step_uav(s, (0.0, 0.0, -100.0), 10.0, SIDE, 22.0, 150.0)
        assert s2.position[2] == 22.0
        s3 = step_uav(s, (0.0, 0.0, 300.0), 100.0, SIDE, 22.0, 150.0)
        assert s3.position[2] == 150.0

    def test_per_step_displacement_bounded(self):
        rng = make_rng(5)
        s = UavState((500.0, 500.0, 80.0), v_max=30.0)
        for _ in range(300):
            action = tuple(rng.uniform(-1000, 1000, 3))
            s2 = step_uav(s, action, 10.0, SIDE, 22.0, 150.0)
            assert math.dist(s2.position, s.position) <= 30.0 * 10.0 + 1e-9
            assert 0.0 <= s2.position[0] <= SIDE
            assert 0.0 <= s2.position[1] <= SIDE
            assert 22.0 <= s2.position[2] <= 150.0
            s = s2


class TestMobilityCircle:
    def test_radius_speed_times_dt(self):
        c = mobility_circle(user(vel=(2.0, 0.0)), 10.0)
        assert c.radius == pytest.approx(20.0)
        assert c.center == (500.0, 500.0)

    def test_zero_speed_degenerate(self):
        c = mobility_circle(user(vel=(0.0, 0.0)), 10.0)
        assert c.radius == 0.0
        assert c.area == 0.0

    def test_at_cap(self):
        u = user(vel=(15.0, 0.0))
        assert mobility_circle(u, 10.0).radius == pytest.approx(u.v_max * 10.0)

    def test_conservative_mode_uses_cap(self):
        u = user(vel=(2.0, 0.0))
        assert mobility_circle(u, 10.0, conservative=True).radius == pytest.approx(150.0)

    def test_rejects_nonpositive_dt(self):
        with pytest.raises(ValueError):
            mobility_circle(user(), 0.0)

    def test_contains(self):
        c = MobilityCircle((10.0, 10.0), 5.0)
        assert c.contains(13.0, 13.0)
        assert not c.contains(16.0, 10.0)


class TestValidation:
    def test_velocity_above_cap_rejected(self):
        with pytest.raises(ConfigError, match="exceeds"):
            UserState((0.0, 0.0), (20.0, 0.0), v_max=15.0)

    def test_bad_class_rejected(self):
        with pytest.raises(ConfigError, match="traffic_class"):
            UserState((0.0, 0.0), (1.0, 0.0), v_max=15.0, traffic_class="video")

    def test_embb_accepted(self):
        u = UserState((0.0, 0.0), (1.0, 0.0), v_max=15.0, traffic_class=EMBB)
        assert u.traffic_class == EMBB
