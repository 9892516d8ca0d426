"""Failure-probability estimators over the mobility circle.

The failure probability is the NLoS area fraction of the circle under
uniform reachability. Three estimators are provided:

* ``estimate_uniform``: plain Monte Carlo over the circle.
* ``estimate_pis``: importance sampling from a defensive mixture with
  weights (1/A)/q(z); unbiased whenever q is the true density of the
  accepted samples (renormalized mode).
* ``oracle_pf_grid``: dense lattice quadrature used as ground truth.

The sampling loops are deliberately per-sample: each draw costs one LoS
ray-cast, so estimator latency scales with the sample budget, which is the
quantity the uniform-vs-mixture comparison is about.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from uavcov.errors import ConfigError
from uavcov.geometry import Environment, _segment_hits_box
from uavcov.mobility import MobilityCircle
from uavcov.proposal import (
    PAPER_FAITHFUL,
    RENORMALIZED,
    BufferedDraws,
    DefensiveMixture,
    _RejectionGuard,
    uniform_disk_sample,
)

PROPOSAL_MODES = ("uniform", "kinematic", "mdn")
DENSITY_MODES = (PAPER_FAITHFUL, RENORMALIZED)


@dataclass(frozen=True)
class VerificationConfig:
    n_samples: int = 100
    alpha: float = 0.6
    epsilon: float = 1e-2
    proposal_mode: str = "kinematic"
    density_mode: str = RENORMALIZED
    seed: int = 0
    mdn_weights_path: str | None = None
    priority_urllc: float = 1.0
    priority_embb: float = 1.0

    def __post_init__(self) -> None:
        if self.n_samples < 1:
            raise ConfigError(f"verification.n_samples: must be >= 1, got {self.n_samples}")
        if not (0.0 <= self.alpha < 1.0):
            raise ConfigError(f"verification.alpha: must be in [0, 1), got {self.alpha}")
        if not (0.0 < self.epsilon < 1.0):
            raise ConfigError(f"verification.epsilon: must be in (0, 1), got {self.epsilon}")
        if self.proposal_mode not in PROPOSAL_MODES:
            raise ConfigError(f"verification.proposal_mode: must be one of {PROPOSAL_MODES}, "
                              f"got {self.proposal_mode!r}")
        if self.density_mode not in DENSITY_MODES:
            raise ConfigError(f"verification.density_mode: must be one of {DENSITY_MODES}, "
                              f"got {self.density_mode!r}")


@dataclass(frozen=True)
class FailureEstimate:
    p_hat: float
    variance_hat: float
    n_samples: int
    max_weight_seen: float
    n_failures_hit: int
    quality: int
    elapsed: float

    def stat_fields(self) -> tuple:
        """Everything except wall-clock, for determinism comparisons."""
        return (self.p_hat, self.variance_hat, self.n_samples,
                self.max_weight_seen, self.n_failures_hit, self.quality)


def _circle_candidates(circle: MobilityCircle, uav, env: Environment):
    cx, cy = circle.center
    r = circle.radius
    x_lo = min(cx - r, float(uav[0]))
    x_hi = max(cx + r, float(uav[0]))
    y_lo = min(cy - r, float(uav[1]))
    y_hi = max(cy + r, float(uav[1]))
    return env.candidate_boxes(x_lo, y_lo, x_hi, y_hi)


def _nlos_scalar(ux: float, uy: float, uz: float, x: float, y: float, boxes) -> bool:
    for box in boxes:
        if _segment_hits_box(ux, uy, uz, x, y, 0.0, box):
            return True
    return False


def _degenerate_estimate(uav, circle: MobilityCircle, env: Environment,
                         n: int, epsilon: float, t0: float) -> FailureEstimate:
    # Radius-0 circle: the only reachable point is the center.
    hit = env.is_nlos(tuple(uav), circle.center)
    p = 1.0 if hit else 0.0
    return FailureEstimate(p, 0.0, n, 1.0, n if hit else 0, int(p < epsilon),
                           time.perf_counter() - t0)


def estimate_uniform(circle: MobilityCircle, uav, env: Environment, n: int,
                     rng: np.random.Generator, epsilon: float = 1e-2) -> FailureEstimate:
    """NLoS fraction of n uniform draws on the circle.

    variance_hat is the closed-form binomial value p(1-p)/n.
    """
    if n < 1:
        raise ValueError(f"estimate_uniform: n must be >= 1, got {n}")
    t0 = time.perf_counter()
    if circle.radius == 0.0:
        return _degenerate_estimate(uav, circle, env, n, epsilon, t0)
    boxes = _circle_candidates(circle, uav, env)
    ux, uy, uz = float(uav[0]), float(uav[1]), float(uav[2])
    cx, cy = circle.center
    r = circle.radius
    draws = BufferedDraws(rng)
    hits = 0
    for _ in range(n):
        x, y = uniform_disk_sample(draws, cx, cy, r)
        if _nlos_scalar(ux, uy, uz, x, y, boxes):
            hits += 1
    p = hits / n
    return FailureEstimate(p, p * (1.0 - p) / n, n, 1.0, hits, int(p < epsilon),
                           time.perf_counter() - t0)


def estimate_pis(circle: MobilityCircle, uav, env: Environment,
                 mixture: DefensiveMixture, cfg: VerificationConfig,
                 rng: np.random.Generator) -> FailureEstimate:
    """Importance-sampled failure probability from a defensive mixture.

    p_hat = (1/N) sum I_F(z_i) w(z_i) with w = (1/A)/q(z_i) in the mixture's
    density mode; variance_hat is the unbiased sample variance of the
    weighted indicators divided by N. Draws rejected for falling outside the
    circle do not consume the budget N.
    """
    t0 = time.perf_counter()
    n = cfg.n_samples
    if circle.radius == 0.0:
        return _degenerate_estimate(uav, circle, env, n, cfg.epsilon, t0)
    boxes = _circle_candidates(circle, uav, env)
    ux, uy, uz = float(uav[0]), float(uav[1]), float(uav[2])
    inv_area = mixture.uniform_density
    alpha = mixture.alpha
    uniform_term = (1.0 - alpha) * inv_area
    inv_z = 1.0 / mixture.normalizer
    guard = _RejectionGuard()
    draws = BufferedDraws(rng)
    cx, cy = circle.center
    r = circle.radius
    r2 = r * r
    # Hot loop: component constants hoisted, density evaluated inline.
    comps = mixture.gmm._comps
    weights_cum = np.cumsum(mixture.gmm.weights).tolist()
    exp = math.exp
    sqrt = math.sqrt

    total = 0.0
    total_sq = 0.0
    hits = 0
    max_w = 0.0
    for _ in range(n):
        while True:
            guard.attempts += 1
            if alpha > 0.0 and draws.random() < alpha:
                u = draws.random()
                ci = 0
                last = len(comps) - 1
                while ci < last and u > weights_cum[ci]:
                    ci += 1
                _, mx, my, ax, ay = comps[ci]
                x = draws.normal(mx, sqrt(0.5 / ax))
                y = draws.normal(my, sqrt(0.5 / ay))
            else:
                x, y = uniform_disk_sample(draws, cx, cy, r)
            dx = x - cx
            dy = y - cy
            if dx * dx + dy * dy <= r2:
                guard.accepted += 1
                break
            guard.check()
        g = 0.0
        for norm, mx, my, ax, ay in comps:
            dxm = x - mx
            dym = y - my
            e = dxm * dxm * ax + dym * dym * ay
            if e < 45.0:
                g += norm * exp(-e)
        w = inv_area / ((alpha * g + uniform_term) * inv_z)
        if w > max_w:
            max_w = w
        if _nlos_scalar(ux, uy, uz, x, y, boxes):
            total += w
            total_sq += w * w
            hits += 1
    p = total / n
    if n > 1:
        var = (total_sq - n * p * p) / (n - 1) / n
        var = max(var, 0.0)
    else:
        var = 0.0
    return FailureEstimate(p, var, n, max_w, hits, int(p < cfg.epsilon),
                           time.perf_counter() - t0)


def grid_points_in_circle(circle: MobilityCircle, resolution: float) -> np.ndarray:
    """Square-lattice points (spacing = resolution) covering the circle."""
    cx, cy = circle.center
    r = circle.radius
    n = max(1, int(math.ceil(2.0 * r / resolution)))
    coords = cx - r + (np.arange(n) + 0.5) * (2.0 * r / n)
    ys = cy - r + (np.arange(n) + 0.5) * (2.0 * r / n)
    xx, yy = np.meshgrid(coords, ys, indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    d2 = (pts[:, 0] - cx) ** 2 + (pts[:, 1] - cy) ** 2
    return pts[d2 <= r * r]


def oracle_pf_grid(circle: MobilityCircle, uav, env: Environment,
                   resolution: float | None = None) -> float:
    """Ground-truth failure probability: NLoS fraction of a dense lattice
    inside the circle. Default resolution is radius/200."""
    if circle.radius == 0.0:
        return 1.0 if env.is_nlos(tuple(uav), circle.center) else 0.0
    if resolution is None:
        resolution = circle.radius / 200.0
    if resolution <= 0:
        raise ValueError(f"oracle_pf_grid: resolution must be > 0, got {resolution}")
    pts = grid_points_in_circle(circle, resolution)
    boxes = _circle_candidates(circle, uav, env)
    blocked = env.blocked_batch(uav, pts, boxes)
    return float(blocked.mean())


def optimal_proposal_check(circle: MobilityCircle, uav, env: Environment,
                           n_samples: int = 1000, n_runs: int = 100,
                           resolution: float | None = None, seed: int = 0) -> dict:
    """Empirical behavior of the oracle-informed proposal (uniform over the
    NLoS grid cells): per-run estimates and their spread.

    Only meaningful when the true failure probability is strictly between 0
    and 1; returns {"skipped": True} otherwise. Intended for test suites,
    not production estimation (it needs the ground truth it estimates).
    """
    if circle.radius == 0.0:
        return {"skipped": True}
    if resolution is None:
        resolution = circle.radius / 200.0
    pts = grid_points_in_circle(circle, resolution)
    boxes = _circle_candidates(circle, uav, env)
    blocked = env.blocked_batch(uav, pts, boxes)
    p_f = float(blocked.mean())
    if p_f <= 0.0 or p_f >= 1.0:
        return {"skipped": True, "p_f": p_f}
    fail_pts = pts[blocked]
    n_f = fail_pts.shape[0]
    cell = 2.0 * circle.radius / max(1, int(math.ceil(2.0 * circle.radius / resolution)))
    # Piecewise-constant proposal: uniform over the union of failure cells.
    weight = n_f * cell * cell / circle.area  # (1/A) / (1/(n_f * cell^2))
    ux, uy, uz = float(uav[0]), float(uav[1]), float(uav[2])
    cx, cy = circle.center
    r2 = circle.radius * circle.radius
    rng = np.random.Generator(np.random.PCG64(seed))
    estimates = np.empty(n_runs)
    for run in range(n_runs):
        idx = rng.integers(0, n_f, size=n_samples)
        jitter = rng.uniform(-0.5 * cell, 0.5 * cell, size=(n_samples, 2))
        zs = fail_pts[idx] + jitter
        total = 0.0
        for x, y in zs:
            if (x - cx) ** 2 + (y - cy) ** 2 > r2:
                continue  # outside the circle: integrand is zero there
            if _nlos_scalar(ux, uy, uz, x, y, boxes):
                total += weight
        estimates[run] = total / n_samples
    return {
        "skipped": False,
        "p_f": p_f,
        "weight": weight,
        "estimates": estimates,
        "mean": float(estimates.mean()),
        "variance": float(estimates.var(ddof=1)),
    }
