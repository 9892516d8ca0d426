"""Episode loop: policy actions, world stepping, user association,
per-user coverage verification and reward aggregation.

Learning is out of scope; UAV control comes from a pluggable policy
interface with three reference baselines (stationary, random walk, greedy
coverage). Verification failures for individual users are logged and
downgrade that user's coverage quality instead of aborting the step.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from uavcov.channel import LinkState, sample_fading, throughput_bps
from uavcov.errors import DegenerateProposalError
from uavcov.estimator import FailureEstimate, estimate_pis, estimate_uniform
from uavcov.geometry import Environment
from uavcov.mdn import MdnWeights, load_mdn_weights, mdn_infer
from uavcov.mobility import URLLC, UavState, UserState, mobility_circle, step_uav, step_user
from uavcov.proposal import DefensiveMixture, kinematic_proposal
from uavcov.rewards import (
    EpisodeMetrics,
    RewardBreakdown,
    aggregate_reward,
    jain_index,
    phi_collision,
    phi_coverage,
    phi_energy,
    phi_load_balance,
    phi_throughput,
)
from uavcov.rng import STREAM_FADING, STREAM_MOBILITY, STREAM_POLICY, STREAM_SAMPLING, substream
from uavcov.scenario import ScenarioConfig, build_world

log = logging.getLogger(__name__)


@dataclass
class WorldState:
    t: int
    users: list[UserState]
    uavs: list[UavState]
    associations: list[int | None]


def associate_users(users: list[UserState], uavs: list[UavState],
                    comm_range: float) -> list[int | None]:
    """Nearest UAV within comm_range per user (3D distance, users at z=0);
    exact ties go to the lower UAV id; None when nothing is in range."""
    if not uavs:
        return [None] * len(users)
    upos = np.array([u.position for u in users], dtype=float)
    vpos = np.array([v.position for v in uavs], dtype=float)
    d2 = ((upos[:, None, 0] - vpos[None, :, 0]) ** 2
          + (upos[:, None, 1] - vpos[None, :, 1]) ** 2
          + vpos[None, :, 2] ** 2)
    best = np.argmin(d2, axis=1)  # first minimum = lowest id on ties
    best_d2 = d2[np.arange(len(users)), best]
    limit = comm_range * comm_range
    return [int(b) if bd <= limit else None for b, bd in zip(best, best_d2)]


class Policy(ABC):
    """One displacement action per UAV per step; actions are clamped by the
    mobility layer, so policies may command any finite vector."""

    name: str = "abstract"

    @abstractmethod
    def actions(self, state: WorldState, cfg: ScenarioConfig,
                rng: np.random.Generator) -> list[tuple[float, float, float]]:
        ...


class StationaryPolicy(Policy):
    name = "stationary"

    def actions(self, state, cfg, rng):
        return [(0.0, 0.0, 0.0)] * len(state.uavs)


class RandomWalkPolicy(Policy):
    name = "random_walk"

    def actions(self, state, cfg, rng):
        out = []
        for uav in state.uavs:
            direction = rng.normal(size=3)
            norm = float(np.linalg.norm(direction))
            if norm == 0.0:
                out.append((0.0, 0.0, 0.0))
                continue
            radius = uav.v_max * cfg.episode.dt_s * rng.random() ** (1.0 / 3.0)
            v = direction / norm * radius
            out.append((float(v[0]), float(v[1]), float(v[2])))
        return out


class GreedyCoveragePolicy(Policy):
    """Move each UAV toward the centroid of its assigned URLLC users'
    predicted positions (mean of the kinematic-proposal means); UAVs with no
    assignment head for the nearest unserved URLLC user."""

    name = "greedy_coverage"

    def actions(self, state, cfg, rng):
        kin = cfg.kinematic
        dt = cfg.episode.dt_s
        predicted: dict[int, tuple[float, float]] = {}
        for uid, user in enumerate(state.users):
            if user.traffic_class == URLLC:
                g = kinematic_proposal(user, dt, kin.k_components,
                                       spread_rad=math.radians(kin.spread_deg),
                                       tau=kin.tau, sigma_frac=kin.sigma_frac)
                predicted[uid] = g.mean()
        unserved = [uid for uid, a in enumerate(state.associations)
                    if a is None and uid in predicted]
        out = []
        for vid, uav in enumerate(state.uavs):
            assigned = [uid for uid, a in enumerate(state.associations)
                        if a == vid and uid in predicted]
            if assigned:
                tx = sum(predicted[uid][0] for uid in assigned) / len(assigned)
                ty = sum(predicted[uid][1] for uid in assigned) / len(assigned)
            elif unserved:
                x0, y0, _ = uav.position
                uid = min(unserved, key=lambda u: (predicted[u][0] - x0) ** 2
                          + (predicted[u][1] - y0) ** 2)
                tx, ty = predicted[uid]
            else:
                out.append((0.0, 0.0, 0.0))
                continue
            out.append((tx - uav.position[0], ty - uav.position[1],
                        cfg.uavs.cruise_altitude_m - uav.position[2]))
        return out


BASELINE_POLICIES: dict[str, type[Policy]] = {
    StationaryPolicy.name: StationaryPolicy,
    RandomWalkPolicy.name: RandomWalkPolicy,
    GreedyCoveragePolicy.name: GreedyCoveragePolicy,
}


def baseline_policies() -> dict[str, type[Policy]]:
    return dict(BASELINE_POLICIES)


def make_policy(name: str) -> Policy:
    return BASELINE_POLICIES[name]()


@dataclass
class StepResult:
    state: WorldState
    breakdown: RewardBreakdown
    sum_throughput_bps: float
    urllc_cr: float
    embb_cr: float
    energy_j: float
    per_user_throughput: np.ndarray
    verification_records: list[dict] = field(default_factory=list)


def _build_mixture(user: UserState, cfg: ScenarioConfig,
                   weights: MdnWeights | None) -> DefensiveMixture:
    dt = cfg.episode.dt_s
    ver = cfg.verification
    kin = cfg.kinematic
    circle = mobility_circle(user, dt)
    if (ver.proposal_mode == "mdn" and weights is not None
            and len(user.history) >= weights.history_len):
        hist = np.array(user.history[-weights.history_len:], dtype=float)
        gmm = mdn_infer(hist, weights, user.position)
    else:
        gmm = kinematic_proposal(user, dt, kin.k_components,
                                 spread_rad=math.radians(kin.spread_deg),
                                 tau=kin.tau, sigma_frac=kin.sigma_frac)
    return DefensiveMixture(alpha=ver.alpha, gmm=gmm, circle=circle,
                            renormalize=(ver.density_mode == "renormalized"))


def verify_user(user: UserState, uav: UavState, env: Environment,
                cfg: ScenarioConfig, rng: np.random.Generator,
                weights: MdnWeights | None = None) -> FailureEstimate:
    """One coverage verification of a user against its serving UAV."""
    circle = mobility_circle(user, cfg.episode.dt_s)
    ver = cfg.verification
    if ver.proposal_mode == "uniform" or circle.radius == 0.0:
        return estimate_uniform(circle, uav.position, env, ver.n_samples, rng, ver.epsilon)
    mixture = _build_mixture(user, cfg, weights)
    return estimate_pis(circle, uav.position, env, mixture, ver, rng)


def run_step(state: WorldState, env: Environment, cfg: ScenarioConfig,
             policy: Policy, mdn_weights: MdnWeights | None = None,
             collect_timings: bool = False) -> StepResult:
    t = state.t + 1
    dt = cfg.episode.dt_s
    seed = cfg.seed

    actions = policy.actions(state, cfg, substream(seed, STREAM_POLICY, t))
    if len(actions) != len(state.uavs):
        raise ValueError(f"policy {policy.name!r} returned {len(actions)} actions "
                         f"for {len(state.uavs)} UAVs")

    uavs = []
    displacements = []
    for uav, action in zip(state.uavs, actions):
        moved = step_uav(uav, action, dt, cfg.area.side_m,
                         cfg.area.altitude_min_m, cfg.area.altitude_max_m)
        displacements.append(math.dist(moved.position, uav.position))
        uavs.append(moved)

    mob_rng = substream(seed, STREAM_MOBILITY, t)
    sigma = math.radians(cfg.users.heading_sigma_deg)
    users = [step_user(u, dt, cfg.area.side_m, mob_rng, sigma) for u in state.users]

    associations = associate_users(users, uavs, cfg.uavs.comm_range_m)

    # Link throughputs for associated users, with per-step fading draws.
    fad_rng = substream(seed, STREAM_FADING, t)
    n_users = len(users)
    throughputs = np.zeros(n_users)
    uav_loads = [0] * len(uavs)
    for uid, (user, vid) in enumerate(zip(users, associations)):
        if vid is None:
            continue
        uav_loads[vid] += 1
        ux, uy, uz = uavs[vid].position
        d = math.dist((ux, uy, uz), (user.position[0], user.position[1], 0.0))
        los = not env.is_nlos(uavs[vid].position, user.position)
        g2 = sample_fading(los, cfg.channel.rician_k, fad_rng)
        throughputs[uid] = throughput_bps(LinkState(max(d, 1e-6), los, g2), cfg.channel)
    if cfg.episode.bandwidth_split:
        for uid, vid in enumerate(associations):
            if vid is not None and uav_loads[vid] > 1:
                throughputs[uid] /= uav_loads[vid]

    # Coverage quality: mixture-sampled verification for URLLC, a single LoS
    # check for eMBB, 0 for anyone out of range.
    qualities = [0] * n_users
    records: list[dict] = []
    for uid, (user, vid) in enumerate(zip(users, associations)):
        if vid is None:
            continue
        if user.traffic_class == URLLC:
            rng = substream(seed, STREAM_SAMPLING, t, uid)
            try:
                est = verify_user(user, uavs[vid], env, cfg, rng, mdn_weights)
            except DegenerateProposalError as exc:
                log.warning("step %d user %d: verification failed (%s); quality set to 0",
                            t, uid, exc)
                continue
            qualities[uid] = est.quality
            rec = {"step": t, "user_id": uid, "uav_id": vid,
                   "p_hat": est.p_hat, "var_hat": est.variance_hat, "n": est.n_samples,
                   "max_w": est.max_weight_seen, "q_u": est.quality}
            if collect_timings:
                rec["elapsed_us"] = est.elapsed * 1e6
            records.append(rec)
        else:
            qualities[uid] = int(not env.is_nlos(uavs[vid].position, user.position))

    priorities = [cfg.verification.priority_urllc if u.traffic_class == URLLC
                  else cfg.verification.priority_embb for u in users]
    served = [float(x) for x in throughputs[throughputs > 0.0]]
    phi_thr = phi_throughput(served, n_users, cfg.channel, cfg.area.altitude_min_m) if n_users else 0.0
    phi_cov = phi_coverage(qualities, priorities) if n_users else 0.0
    phi_bal = phi_load_balance(uav_loads) if uav_loads else 0.0
    phi_en = phi_energy(displacements, cfg.uavs.v_max_mps, dt) if displacements else 1.0
    pair_d = [math.dist(a.position, b.position)
              for i, a in enumerate(uavs) for b in uavs[i + 1:]]
    phi_col = phi_collision(pair_d, cfg.reward.d_shift_m, cfg.reward.k_scale_m)
    breakdown = aggregate_reward(phi_thr, phi_cov, phi_bal, phi_en, phi_col, cfg.reward.weights)

    urllc_ids = [i for i, u in enumerate(users) if u.traffic_class == URLLC]
    embb_ids = [i for i, u in enumerate(users) if u.traffic_class != URLLC]
    urllc_cr = (sum(qualities[i] for i in urllc_ids) / len(urllc_ids)) if urllc_ids else 1.0
    embb_cr = (sum(qualities[i] for i in embb_ids) / len(embb_ids)) if embb_ids else 1.0
    energy_j = cfg.reward.energy_per_meter_j * sum(displacements)

    return StepResult(WorldState(t, users, uavs, associations), breakdown,
                      float(throughputs.sum()), urllc_cr, embb_cr, energy_j,
                      throughputs, records)


@dataclass
class EpisodeResult:
    metrics: EpisodeMetrics
    step_rows: list[dict]
    verification_records: list[dict]
    final_state: WorldState
    uav_tracks: list[list[tuple[float, float, float]]] = field(default_factory=list)


def initial_state(cfg: ScenarioConfig, env: Environment | None = None
                  ) -> tuple[Environment, WorldState]:
    env, users, uavs = build_world(cfg, env)
    return env, WorldState(0, users, uavs, associate_users(users, uavs, cfg.uavs.comm_range_m))


def run_episode(cfg: ScenarioConfig, env: Environment | None = None,
                policy: Policy | None = None,
                collect_timings: bool = False) -> EpisodeResult:
    """Execute the configured number of steps and aggregate episode metrics."""
    env, state = initial_state(cfg, env)
    policy = policy or make_policy(cfg.episode.policy)
    mdn_weights = None
    if cfg.verification.proposal_mode == "mdn":
        if cfg.verification.mdn_weights_path is None:
            raise ValueError("verification.proposal_mode is 'mdn' but no mdn_weights_path is set")
        mdn_weights = load_mdn_weights(cfg.verification.mdn_weights_path)

    rows: list[dict] = []
    records: list[dict] = []
    energy_j = 0.0
    sum_thr = []
    urllc_crs = []
    embb_crs = []
    per_user = np.zeros(len(state.users))
    tracks: list[list[tuple[float, float, float]]] = [[u.position] for u in state.uavs]
    for _ in range(cfg.episode.n_steps):
        res = run_step(state, env, cfg, policy, mdn_weights, collect_timings)
        state = res.state
        for track, uav in zip(tracks, state.uavs):
            track.append(uav.position)
        energy_j += res.energy_j
        sum_thr.append(res.sum_throughput_bps)
        urllc_crs.append(res.urllc_cr)
        embb_crs.append(res.embb_cr)
        per_user += res.per_user_throughput
        b = res.breakdown
        rows.append({
            "t": state.t,
            "phi_thr": b.phi_thr, "phi_cov": b.phi_cov, "phi_bal": b.phi_bal,
            "phi_energy": b.phi_energy, "phi_coll": b.phi_coll,
            "reward_total": b.total,
            "sum_throughput_bps": res.sum_throughput_bps,
            "urllc_cr": res.urllc_cr, "embb_cr": res.embb_cr,
            "energy_kj_cum": energy_j / 1e3,
        })
        records.extend(res.verification_records)

    per_user_mean = per_user / cfg.episode.n_steps
    try:
        jain = jain_index([float(x) for x in per_user_mean]) if len(per_user_mean) else 0.0
    except ValueError:
        jain = 0.0  # nobody was ever served
    has_urllc = any(u.traffic_class == URLLC for u in state.users)
    has_embb = any(u.traffic_class != URLLC for u in state.users)
    metrics = EpisodeMetrics(
        sum_throughput_bps=float(np.mean(sum_thr)) if sum_thr else 0.0,
        urllc_cr=float(np.mean(urllc_crs)) if urllc_crs else 1.0,
        embb_cr=float(np.mean(embb_crs)) if embb_crs else 1.0,
        energy_kj=energy_j / 1e3,
        jain=jain,
        urllc_empty=not has_urllc,
        embb_empty=not has_embb,
    )
    return EpisodeResult(metrics, rows, records, state, tracks)
