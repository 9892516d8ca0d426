"""Scenario configuration: YAML surface, validation and world construction.

One file describes the whole run: the obstacle world, channel constants,
user population, UAV fleet, episode settings, verification settings and
reward weights. All randomness downstream derives from the single master
seed via named substreams.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import yaml

from uavcov.channel import ChannelParams
from uavcov.errors import ConfigError
from uavcov.estimator import VerificationConfig
from uavcov.geometry import Environment, Obstacle
from uavcov.mobility import EMBB, URLLC, UavState, UserState
from uavcov.rewards import RewardWeights
from uavcov.rng import STREAM_INIT, substream

POLICIES = ("stationary", "random_walk", "greedy_coverage")


def _check_keys(section: str, d: dict, allowed: set[str]) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{section}: unknown keys {sorted(unknown)} (allowed: {sorted(allowed)})")


@dataclass(frozen=True)
class AreaConfig:
    side_m: float = 1500.0
    altitude_min_m: float = 22.0
    altitude_max_m: float = 150.0
    grid_cell_m: float = 50.0
    obstacles: tuple[tuple[float, float, float, float, float], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "obstacles",
                           tuple(tuple(float(v) for v in ob) for ob in self.obstacles))
        for i, ob in enumerate(self.obstacles):
            if len(ob) != 5:
                raise ConfigError(f"area.obstacles[{i}]: expected [x_min, y_min, x_max, y_max, height]")


@dataclass(frozen=True)
class UserPopulation:
    n_urllc: int = 30
    n_embb: int = 200
    v_max_mps: float = 15.0
    speed_min_mps: float = 1.0
    heading_sigma_deg: float = 15.0
    history_len: int = 8
    placements: tuple[tuple, ...] = ()  # optional (x, y, vx, vy, class) rows

    def __post_init__(self) -> None:
        if self.n_urllc < 0 or self.n_embb < 0:
            raise ConfigError("users: counts must be >= 0")
        if not (0 <= self.speed_min_mps <= self.v_max_mps):
            raise ConfigError(f"users.speed_min_mps: need 0 <= min <= v_max, got "
                              f"[{self.speed_min_mps}, {self.v_max_mps}]")
        if self.history_len < 1:
            raise ConfigError(f"users.history_len: must be >= 1, got {self.history_len}")
        rows = []
        for i, row in enumerate(self.placements):
            if len(row) != 5:
                raise ConfigError(f"users.placements[{i}]: expected [x, y, vx, vy, class]")
            x, y, vx, vy, cls = row
            if cls not in (URLLC, EMBB):
                raise ConfigError(f"users.placements[{i}]: class must be '{URLLC}' or '{EMBB}'")
            rows.append((float(x), float(y), float(vx), float(vy), cls))
        object.__setattr__(self, "placements", tuple(rows))


@dataclass(frozen=True)
class UavFleet:
    count: int = 5
    v_max_mps: float = 30.0
    comm_range_m: float = 300.0
    cruise_altitude_m: float = 80.0
    placements: tuple[tuple[float, float, float], ...] = ()

    def __post_init__(self) -> None:
        if self.count < 0:
            raise ConfigError(f"uavs.count: must be >= 0, got {self.count}")
        if self.comm_range_m <= 0:
            raise ConfigError(f"uavs.comm_range_m: must be > 0, got {self.comm_range_m}")
        rows = []
        for i, row in enumerate(self.placements):
            if len(row) != 3:
                raise ConfigError(f"uavs.placements[{i}]: expected [x, y, z]")
            rows.append(tuple(float(v) for v in row))
        object.__setattr__(self, "placements", tuple(rows))


@dataclass(frozen=True)
class EpisodeConfig:
    n_steps: int = 40
    dt_s: float = 10.0
    policy: str = "greedy_coverage"
    bandwidth_split: bool = False

    def __post_init__(self) -> None:
        if self.n_steps < 1:
            raise ConfigError(f"episode.n_steps: must be >= 1, got {self.n_steps}")
        if self.dt_s <= 0:
            raise ConfigError(f"episode.dt_s: must be > 0, got {self.dt_s}")
        if self.policy not in POLICIES:
            raise ConfigError(f"episode.policy: must be one of {POLICIES}, got {self.policy!r}")


@dataclass(frozen=True)
class RewardConfig:
    weights: RewardWeights = field(default_factory=RewardWeights)
    d_shift_m: float = 100.0
    k_scale_m: float = 50.0
    energy_per_meter_j: float = 100.0

    def __post_init__(self) -> None:
        if isinstance(self.weights, dict):
            _check_keys("reward.weights", self.weights, set(RewardWeights.__dataclass_fields__))
            object.__setattr__(self, "weights", RewardWeights(**self.weights))
        if self.k_scale_m <= 0:
            raise ConfigError(f"reward.k_scale_m: must be > 0, got {self.k_scale_m}")
        if self.energy_per_meter_j < 0:
            raise ConfigError(f"reward.energy_per_meter_j: must be >= 0, got {self.energy_per_meter_j}")


@dataclass(frozen=True)
class KinematicConfig:
    k_components: int = 5
    spread_deg: float = 60.0
    tau: float = 0.9
    sigma_frac: float = 0.25

    def __post_init__(self) -> None:
        if self.k_components < 1:
            raise ConfigError(f"kinematic.k_components: must be >= 1, got {self.k_components}")
        if not (0.0 < self.tau <= 1.0):
            raise ConfigError(f"kinematic.tau: must be in (0, 1], got {self.tau}")
        if self.sigma_frac <= 0:
            raise ConfigError(f"kinematic.sigma_frac: must be > 0, got {self.sigma_frac}")


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 7
    area: AreaConfig = field(default_factory=AreaConfig)
    channel: ChannelParams = field(default_factory=ChannelParams)
    users: UserPopulation = field(default_factory=UserPopulation)
    uavs: UavFleet = field(default_factory=UavFleet)
    episode: EpisodeConfig = field(default_factory=EpisodeConfig)
    verification: VerificationConfig = field(default_factory=VerificationConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    kinematic: KinematicConfig = field(default_factory=KinematicConfig)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["area"]["obstacles"] = [list(ob) for ob in self.area.obstacles]
        d["users"]["placements"] = [list(p) for p in self.users.placements]
        d["uavs"]["placements"] = [list(p) for p in self.uavs.placements]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        if not isinstance(d, dict):
            raise ConfigError("config: top level must be a mapping")
        _check_keys("config", d, {"seed", "area", "channel", "users", "uavs",
                                  "episode", "verification", "reward", "kinematic"})

        def section(name: str, klass):
            sub = d.get(name, {})
            if not isinstance(sub, dict):
                raise ConfigError(f"{name}: must be a mapping")
            fields = {f for f in klass.__dataclass_fields__}
            _check_keys(name, sub, fields)
            try:
                return klass(**sub)
            except TypeError as exc:
                raise ConfigError(f"{name}: {exc}") from exc

        return cls(
            seed=int(d.get("seed", 7)),
            area=section("area", AreaConfig),
            channel=section("channel", ChannelParams),
            users=section("users", UserPopulation),
            uavs=section("uavs", UavFleet),
            episode=section("episode", EpisodeConfig),
            verification=section("verification", VerificationConfig),
            reward=section("reward", RewardConfig),
            kinematic=section("kinematic", KinematicConfig),
        )

    def with_seed(self, seed: int | None) -> "ScenarioConfig":
        return self if seed is None else replace(self, seed=int(seed))


def load_config(path: str | Path) -> ScenarioConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        raw = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {p}: invalid YAML ({exc})") from exc
    return ScenarioConfig.from_dict(raw or {})


def save_config(cfg: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=True))


def build_environment(cfg: ScenarioConfig) -> Environment:
    obstacles = tuple(Obstacle(*ob) for ob in cfg.area.obstacles)
    return Environment(side=cfg.area.side_m, obstacles=obstacles,
                       altitude_min=cfg.area.altitude_min_m,
                       altitude_max=cfg.area.altitude_max_m,
                       grid_cell=cfg.area.grid_cell_m)


def build_world(cfg: ScenarioConfig, env: Environment | None = None
                ) -> tuple[Environment, list[UserState], list[UavState]]:
    """Construct the initial world from the config and the init substream.

    Explicit placements take precedence; otherwise users get uniform random
    positions outside building footprints with random headings, and UAVs get
    uniform random positions at the cruise altitude.
    """
    if env is None:
        env = build_environment(cfg)
    rng = substream(cfg.seed, STREAM_INIT)
    side = cfg.area.side_m

    users: list[UserState] = []
    if cfg.users.placements:
        for x, y, vx, vy, cls in cfg.users.placements:
            users.append(UserState((x, y), (vx, vy), cfg.users.v_max_mps, cls,
                                   history_len=cfg.users.history_len))
    else:
        classes = [URLLC] * cfg.users.n_urllc + [EMBB] * cfg.users.n_embb
        for cls in classes:
            for _ in range(1000):
                x = rng.uniform(0.0, side)
                y = rng.uniform(0.0, side)
                if not any(ob.x_min <= x <= ob.x_max and ob.y_min <= y <= ob.y_max
                           for ob in env.obstacles):
                    break
            speed = rng.uniform(cfg.users.speed_min_mps, cfg.users.v_max_mps)
            heading = rng.uniform(0.0, 2.0 * math.pi)
            users.append(UserState((x, y), (speed * math.cos(heading), speed * math.sin(heading)),
                                   cfg.users.v_max_mps, cls, history_len=cfg.users.history_len))

    uavs: list[UavState] = []
    if cfg.uavs.placements:
        for x, y, z in cfg.uavs.placements:
            uavs.append(UavState((x, y, z), cfg.uavs.v_max_mps))
    else:
        for _ in range(cfg.uavs.count):
            x = rng.uniform(0.0, side)
            y = rng.uniform(0.0, side)
            uavs.append(UavState((x, y, cfg.uavs.cruise_altitude_m), cfg.uavs.v_max_mps))
    return env, users, uavs
