"""Air-to-ground channel: log-distance path loss, received power, small-scale
fading and Shannon throughput for UAV-user links."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from uavcov.errors import ConfigError


@dataclass(frozen=True)
class ChannelParams:
    alpha_pl_db: float = 69.8
    beta_pl: float = 2.0
    tx_power_dbm: float = 30.0
    gain_uav_dbi: float = 0.0
    gain_user_dbi: float = 0.0
    bandwidth_hz: float = 1.0e8
    noise_power_dbm: float = -85.0
    rician_k: float = 2.0
    shadowing_sigma_db: float = 3.1
    shadowing_enabled: bool = False

    def __post_init__(self) -> None:
        if not self.bandwidth_hz > 0:
            raise ConfigError(f"channel.bandwidth_hz: must be > 0, got {self.bandwidth_hz}")
        if not self.beta_pl > 0:
            raise ConfigError(f"channel.beta_pl: must be > 0, got {self.beta_pl}")
        if self.rician_k < 0:
            raise ConfigError(f"channel.rician_k: must be >= 0, got {self.rician_k}")
        if self.shadowing_sigma_db < 0:
            raise ConfigError(f"channel.shadowing_sigma_db: must be >= 0, got {self.shadowing_sigma_db}")


@dataclass(frozen=True)
class LinkState:
    """One realized link: 3D distance, LoS flag and squared fading coefficient."""

    distance_m: float
    los: bool
    fading_coeff_sq: float = 1.0

    def __post_init__(self) -> None:
        if not self.distance_m > 0:
            raise ConfigError(f"link.distance_m: must be > 0, got {self.distance_m}")
        if self.fading_coeff_sq < 0:
            raise ConfigError(f"link.fading_coeff_sq: must be >= 0, got {self.fading_coeff_sq}")


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    if x <= 0:
        raise ValueError(f"linear value must be > 0 to convert to dB, got {x}")
    return 10.0 * math.log10(x)


def path_loss_db(d: float, p: ChannelParams) -> float:
    """alpha_pl + 10 * beta_pl * log10(d), d in meters."""
    if d <= 0:
        raise ValueError(f"path_loss_db: distance must be > 0, got {d}")
    return p.alpha_pl_db + 10.0 * p.beta_pl * math.log10(d)


def received_power_dbm(d: float, p: ChannelParams,
                       rng: np.random.Generator | None = None) -> float:
    """Tx power plus both antenna gains minus path loss; optional log-normal
    shadowing term when enabled (needs an rng)."""
    pr = p.tx_power_dbm + p.gain_uav_dbi + p.gain_user_dbi - path_loss_db(d, p)
    if p.shadowing_enabled:
        if rng is None:
            raise ValueError("received_power_dbm: shadowing enabled but no rng given")
        pr -= rng.normal(0.0, p.shadowing_sigma_db)
    return pr


def sample_fading(los: bool, rician_k: float, rng: np.random.Generator) -> float:
    """Squared small-scale fading coefficient |g|^2, normalized to unit mean.

    LoS draws Rician envelope power with K-factor rician_k (two-Gaussian
    construction); NLoS draws Rayleigh power, i.e. unit-mean exponential.
    K = 0 reduces the LoS branch to the NLoS distribution.
    """
    if rician_k < 0:
        raise ValueError(f"sample_fading: rician_k must be >= 0, got {rician_k}")
    if los:
        # X ~ N(nu, s^2), Y ~ N(0, s^2) with nu^2 = K/(K+1), 2 s^2 = 1/(K+1)
        # gives E[X^2 + Y^2] = 1.
        s = math.sqrt(1.0 / (2.0 * (rician_k + 1.0)))
        nu = math.sqrt(rician_k / (rician_k + 1.0))
        x = rng.normal(nu, s)
        y = rng.normal(0.0, s)
        return x * x + y * y
    return float(rng.exponential(1.0))


def snr_linear(link: LinkState, p: ChannelParams) -> float:
    """Linear SNR: received power and noise converted out of dBm, times |g|^2."""
    pr_dbm = received_power_dbm(link.distance_m, p)
    return db_to_linear(pr_dbm - p.noise_power_dbm) * link.fading_coeff_sq


def throughput_bps(link: LinkState, p: ChannelParams) -> float:
    """Shannon rate bandwidth * log2(1 + SNR) in bits/s."""
    return p.bandwidth_hz * math.log2(1.0 + snr_linear(link, p))


def max_snr_linear(p: ChannelParams, h_min: float) -> float:
    """Best-case link SNR: LoS at the minimum UAV altitude with unit fading.

    Normalizer for the throughput reward component.
    """
    return snr_linear(LinkState(distance_m=h_min, los=True, fading_coeff_sq=1.0), p)
