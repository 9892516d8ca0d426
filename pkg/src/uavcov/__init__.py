"""Line-of-sight coverage verification for UAV networks.

Provides an obstacle world with exact segment/box occlusion tests, an
air-to-ground channel model, user/UAV mobility, defensive-mixture
importance sampling for rare LoS-failure probabilities, and an
episode-based multi-UAV trajectory simulator with a multi-objective
reward pipeline.
"""

from uavcov.errors import ConfigError, DegenerateProposalError
from uavcov.geometry import Environment, Obstacle, is_nlos, segment_blocked
from uavcov.channel import ChannelParams, LinkState, path_loss_db, received_power_dbm, sample_fading, throughput_bps
from uavcov.mobility import MobilityCircle, UavState, UserState, mobility_circle, step_uav, step_user
from uavcov.proposal import DefensiveMixture, GaussianMixture2D, gmm_mass_in_circle, kinematic_proposal
from uavcov.mdn import MdnWeights, load_mdn_weights, mdn_infer, save_mdn_weights
from uavcov.estimator import (
    FailureEstimate,
    VerificationConfig,
    estimate_pis,
    estimate_uniform,
    optimal_proposal_check,
    oracle_pf_grid,
)
from uavcov.rewards import (
    EpisodeMetrics,
    RewardBreakdown,
    RewardWeights,
    aggregate_reward,
    jain_index,
    phi_collision,
    phi_coverage,
    phi_energy,
    phi_load_balance,
    phi_throughput,
)

__version__ = "0.1.0"
