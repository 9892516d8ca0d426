"""Normalized reward components and episode metrics.

Each component is a dimensionless utility in [0, 1]: throughput against the
best-case link budget, priority-weighted coverage, load balance across
UAVs, energy headroom, and a pairwise spacing penalty. The aggregate is a
static weighted sum with the spacing term subtracted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from uavcov.channel import ChannelParams, max_snr_linear
from uavcov.errors import ConfigError


@dataclass(frozen=True)
class RewardWeights:
    throughput: float = 0.2
    coverage: float = 0.2
    balance: float = 0.2
    energy: float = 0.2
    collision: float = 0.2

    def __post_init__(self) -> None:
        vals = (self.throughput, self.coverage, self.balance, self.energy, self.collision)
        if any(v < 0 for v in vals):
            raise ConfigError("reward.weights: all weights must be >= 0")
        if abs(sum(vals) - 1.0) > 1e-9:
            raise ConfigError(f"reward.weights: must sum to 1, got {sum(vals)!r}")


@dataclass(frozen=True)
class RewardBreakdown:
    phi_thr: float
    phi_cov: float
    phi_bal: float
    phi_energy: float
    phi_coll: float
    total: float


@dataclass(frozen=True)
class EpisodeMetrics:
    sum_throughput_bps: float
    urllc_cr: float
    embb_cr: float
    energy_kj: float
    jain: float
    urllc_empty: bool = False
    embb_empty: bool = False


def phi_throughput(throughputs_bps: list[float], n_users: int,
                   params: ChannelParams, h_min: float) -> float:
    """Sum of served link rates over the all-users best-case total, where the
    best case is every user at distance h_min, LoS, unit fading."""
    if n_users < 1:
        raise ValueError("phi_throughput: n_users must be >= 1")
    denom = n_users * params.bandwidth_hz * math.log2(1.0 + max_snr_linear(params, h_min))
    return min(sum(throughputs_bps) / denom, 1.0)


def phi_coverage(qualities: list[int], weights: list[float] | None = None) -> float:
    """Priority-weighted fraction of users with coverage quality 1."""
    if not qualities:
        raise ValueError("phi_coverage: empty user set")
    if weights is None:
        weights = [1.0] * len(qualities)
    if len(weights) != len(qualities):
        raise ValueError("phi_coverage: weights and qualities must have equal length")
    total_w = sum(weights)
    if total_w <= 0:
        raise ValueError("phi_coverage: total weight must be > 0")
    return sum(w * q for w, q in zip(weights, qualities)) / total_w


def phi_load_balance(user_counts: list[int], eps_denom: float = 1e-6) -> float:
    """(mean - population std) / (mean + eps), clamped to [0, 1]."""
    if not user_counts:
        raise ValueError("phi_load_balance: need at least one UAV")
    n = len(user_counts)
    mean = sum(user_counts) / n
    var = sum((c - mean) ** 2 for c in user_counts) / n
    val = (mean - math.sqrt(var)) / (mean + eps_denom)
    return min(max(val, 0.0), 1.0)


def phi_energy(displacements_m: list[float], v_max: float, dt: float) -> float:
    """1 - total displacement over the fleet-wide maximum; 1 when hovering."""
    if not displacements_m:
        raise ValueError("phi_energy: need at least one UAV")
    limit = len(displacements_m) * v_max * dt
    for d in displacements_m:
        if d > v_max * dt + 1e-9:
            raise ValueError(f"phi_energy: displacement {d} exceeds v_max*dt {v_max * dt}")
    return 1.0 - sum(displacements_m) / limit


def phi_collision(pairwise_distances_m: list[float], d_shift: float = 100.0,
                  k_scale: float = 50.0) -> float:
    """Mean over UAV pairs of exp(-|d - d_shift| / k_scale); 0 with no pairs."""
    if not pairwise_distances_m:
        return 0.0
    if k_scale <= 0:
        raise ValueError(f"phi_collision: k_scale must be > 0, got {k_scale}")
    return sum(math.exp(-abs(d - d_shift) / k_scale) for d in pairwise_distances_m) \
        / len(pairwise_distances_m)


def aggregate_reward(phi_thr: float, phi_cov: float, phi_bal: float,
                     phi_energy_: float, phi_coll: float, w: RewardWeights) -> RewardBreakdown:
    """Weighted sum of the components; the pairwise spacing term enters with
    a negative sign (it is a penalty), energy is already reward-shaped."""
    total = (w.throughput * phi_thr + w.coverage * phi_cov + w.balance * phi_bal
             + w.energy * phi_energy_ - w.collision * phi_coll)
    return RewardBreakdown(phi_thr, phi_cov, phi_bal, phi_energy_, phi_coll, total)


def jain_index(values: list[float]) -> float:
    """(sum x)^2 / (n * sum x^2); 1 means perfectly even allocation."""
    if not values:
        raise ValueError("jain_index: empty value list")
    if any(v < 0 for v in values):
        raise ValueError("jain_index: values must be >= 0")
    sq_sum = sum(v * v for v in values)
    if sq_sum == 0:
        raise ValueError("jain_index: undefined for all-zero values")
    s = sum(values)
    return (s * s) / (len(values) * sq_sum)
