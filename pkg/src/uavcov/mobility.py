"""User and UAV motion over discrete decision intervals.

Users follow a constant-speed heading random walk with boundary reflection;
UAVs execute commanded displacements under a hard speed cap and are clamped
into the safe flight volume. Each user's reachable set over one interval is
the mobility circle of radius speed * dt around its current position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from uavcov.errors import ConfigError

URLLC = "urllc"
EMBB = "embb"


@dataclass(frozen=True)
class UserState:
    position: tuple[float, float]
    velocity: tuple[float, float]
    v_max: float
    traffic_class: str = URLLC
    history_len: int = 8
    history: tuple[tuple[float, float], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.traffic_class not in (URLLC, EMBB):
            raise ConfigError(f"user.traffic_class: must be '{URLLC}' or '{EMBB}', got {self.traffic_class!r}")
        if self.v_max < 0:
            raise ConfigError(f"user.v_max: must be >= 0, got {self.v_max}")
        if self.speed > self.v_max + 1e-9:
            raise ConfigError(f"user.velocity: speed {self.speed:.3f} exceeds v_max {self.v_max}")
        if len(self.history) > self.history_len:
            raise ConfigError("user.history: longer than history_len")

    @property
    def speed(self) -> float:
        return math.hypot(self.velocity[0], self.velocity[1])


@dataclass(frozen=True)
class UavState:
    position: tuple[float, float, float]
    v_max: float = 30.0

    def __post_init__(self) -> None:
        if self.v_max <= 0:
            raise ConfigError(f"uav.v_max: must be > 0, got {self.v_max}")


@dataclass(frozen=True)
class MobilityCircle:
    """Reachable disk over one interval: center at the user, radius speed*dt."""

    center: tuple[float, float]
    radius: float

    def __post_init__(self) -> None:
        if self.radius < 0:
            raise ConfigError(f"circle.radius: must be >= 0, got {self.radius}")

    @property
    def area(self) -> float:
        return math.pi * self.radius * self.radius

    def contains(self, x: float, y: float) -> bool:
        dx = x - self.center[0]
        dy = y - self.center[1]
        return dx * dx + dy * dy <= self.radius * self.radius


def _reflect(pos: float, vel: float, lo: float, hi: float) -> tuple[float, float]:
    """Fold a coordinate back into [lo, hi], flipping velocity per bounce."""
    span = hi - lo
    for _ in range(64):
        if pos < lo:
            pos = 2 * lo - pos
            vel = -vel
        elif pos > hi:
            pos = 2 * hi - pos
            vel = -vel
        else:
            return pos, vel
        if span <= 0:
            return lo, vel
    return min(max(pos, lo), hi), vel


def step_user(u: UserState, dt: float, side: float,
              rng: np.random.Generator, heading_sigma_rad: float = math.radians(15.0)) -> UserState:
    """Advance one interval: move, reflect at the area boundary, then perturb
    the heading by N(0, heading_sigma) keeping speed constant.

    The velocity actually applied over the interval (after reflection) is
    appended to the history ring buffer; it is what a trajectory predictor
    would have observed for this step.
    """
    x, y = u.position
    vx, vy = u.velocity
    x, vx = _reflect(x + vx * dt, vx, 0.0, side)
    y, vy = _reflect(y + vy * dt, vy, 0.0, side)
    applied = (vx, vy)

    speed = math.hypot(vx, vy)
    if speed > 0 and heading_sigma_rad > 0:
        theta = math.atan2(vy, vx) + rng.normal(0.0, heading_sigma_rad)
        vx = speed * math.cos(theta)
        vy = speed * math.sin(theta)
    # Re-clamp: reflection and rotation preserve speed, but guard anyway.
    speed = math.hypot(vx, vy)
    if speed > u.v_max and speed > 0:
        scale = u.v_max / speed
        vx *= scale
        vy *= scale

    history = (u.history + (applied,))[-u.history_len:]
    return replace(u, position=(x, y), velocity=(vx, vy), history=history)


def step_uav(s: UavState, action: tuple[float, float, float], dt: float,
             side: float, altitude_min: float, altitude_max: float) -> UavState:
    """Apply a commanded displacement, scaling it down to the speed cap when
    needed and clamping the result into [0,side]^2 x [alt_min, alt_max]."""
    dx, dy, dz = float(action[0]), float(action[1]), float(action[2])
    norm = math.sqrt(dx * dx + dy * dy + dz * dz)
    limit = s.v_max * dt
    if norm > limit and norm > 0:
        scale = limit / norm
        dx, dy, dz = dx * scale, dy * scale, dz * scale
    x = min(max(s.position[0] + dx, 0.0), side)
    y = min(max(s.position[1] + dy, 0.0), side)
    z = min(max(s.position[2] + dz, altitude_min), altitude_max)
    return replace(s, position=(x, y, z))


def mobility_circle(u: UserState, dt: float, conservative: bool = False) -> MobilityCircle:
    """Reachable disk for the coming interval; radius uses the current speed,
    or v_max in conservative mode."""
    if dt <= 0:
        raise ValueError(f"mobility_circle: dt must be > 0, got {dt}")
    speed = u.v_max if conservative else u.speed
    return MobilityCircle(center=u.position, radius=speed * dt)
