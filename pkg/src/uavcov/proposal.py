"""Proposal distributions over the mobility circle.

A Gaussian mixture predicts where the user is likely to be next; blending
it with the uniform distribution on the circle gives a defensive proposal
whose density is bounded below by (1-alpha)/A, which keeps importance
weights bounded no matter how wrong the prediction is.

Two density conventions are supported:

* ``paper_faithful``: q(z) = alpha * gmm(z) + (1-alpha)/A on the circle.
  Combined with rejection of out-of-circle draws this is slightly
  mis-normalized whenever the mixture leaks mass outside the circle.
* ``renormalized`` (default for verification): the same expression divided
  by Z = alpha * G_C + (1-alpha), where G_C is the mixture mass inside the
  circle, making it the exact density of the accepted samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from uavcov.errors import ConfigError, DegenerateProposalError
from uavcov.mobility import MobilityCircle, UserState

PAPER_FAITHFUL = "paper_faithful"
RENORMALIZED = "renormalized"

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class GaussianMixture2D:
    """K-component planar Gaussian mixture with diagonal covariances.

    weights: (K,), sums to 1; means: (K, 2) meters; variances: (K, 2) m^2.
    """

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    _comps: tuple = field(init=False, repr=False)

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        m = np.asarray(self.means, dtype=float)
        v = np.asarray(self.variances, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise ConfigError("gmm.weights: need at least one component")
        k = w.size
        if m.shape != (k, 2) or v.shape != (k, 2):
            raise ConfigError(f"gmm: means/variances must have shape ({k}, 2)")
        if not (np.isfinite(w).all() and np.isfinite(m).all() and np.isfinite(v).all()):
            raise ConfigError("gmm: all parameters must be finite")
        if (w <= 0).any():
            raise ConfigError("gmm.weights: all weights must be > 0")
        if abs(float(w.sum()) - 1.0) > 1e-9:
            raise ConfigError(f"gmm.weights: must sum to 1, got {float(w.sum())!r}")
        if (v <= 0).any():
            raise ConfigError("gmm.variances: all variances must be > 0")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "variances", v)
        # Scalar tuples for the per-sample hot path: (norm, mx, my, inv2vx, inv2vy).
        comps = tuple(
            (w[i] / (_TWO_PI * math.sqrt(v[i, 0] * v[i, 1])),
             m[i, 0], m[i, 1], 0.5 / v[i, 0], 0.5 / v[i, 1])
            for i in range(k))
        object.__setattr__(self, "_comps", comps)

    @property
    def k(self) -> int:
        return self.weights.size

    def pdf(self, x: float, y: float) -> float:
        total = 0.0
        for norm, mx, my, ax, ay in self._comps:
            dx = x - mx
            dy = y - my
            e = dx * dx * ax + dy * dy * ay
            if e < 45.0:  # exp underflows beyond this
                total += norm * math.exp(-e)
        return total

    def pdf_batch(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        d = pts[:, None, :] - self.means[None, :, :]  # (n, K, 2)
        e = 0.5 * (d * d / self.variances[None, :, :]).sum(axis=2)
        norm = self.weights / (_TWO_PI * np.sqrt(self.variances.prod(axis=1)))
        return (norm[None, :] * np.exp(-np.minimum(e, 700.0))).sum(axis=1)

    def mean(self) -> tuple[float, float]:
        mu = self.weights @ self.means
        return float(mu[0]), float(mu[1])

    def sample_component(self, rng: np.random.Generator) -> int:
        u = rng.random()
        acc = 0.0
        for i, w in enumerate(self.weights):
            acc += w
            if u <= acc:
                return i
        return self.weights.size - 1


def kinematic_proposal(u: UserState, dt: float, k: int = 5, *,
                       spread_rad: float = math.radians(60.0),
                       tau: float = 0.9,
                       sigma_frac: float = 0.25) -> GaussianMixture2D:
    """Prediction-free proposal: fan K components over headings around the
    current velocity direction.

    Component means extrapolate the position by tau * speed * dt along each
    heading; weights decay with heading offset; standard deviations are
    sigma_frac of the circle radius. A stationary user collapses to a single
    isotropic component at the center with sigma = 0.5 * radius.
    """
    if k < 1:
        raise ConfigError(f"kinematic: k must be >= 1, got {k}")
    x, y = u.position
    speed = u.speed
    r = speed * dt
    if speed == 0.0 or r == 0.0:
        sigma = max(0.5 * u.v_max * dt, 1e-6)
        return GaussianMixture2D(np.array([1.0]), np.array([[x, y]]),
                                 np.array([[sigma * sigma, sigma * sigma]]))
    heading = math.atan2(u.velocity[1], u.velocity[0])
    if k == 1:
        offsets = np.array([0.0])
    else:
        offsets = np.linspace(-spread_rad, spread_rad, k)
    decay = spread_rad / 2.0 if spread_rad > 0 else 1.0
    weights = np.exp(-0.5 * (offsets / decay) ** 2)
    weights /= weights.sum()
    means = np.column_stack([
        x + r * tau * np.cos(heading + offsets),
        y + r * tau * np.sin(heading + offsets),
    ])
    sigma = max(sigma_frac * r, 1e-9)
    variances = np.full((k, 2), sigma * sigma)
    return GaussianMixture2D(weights, means, variances)


def gmm_mass_in_circle(g: GaussianMixture2D, c: MobilityCircle, tol: float = 1e-4) -> float:
    """Mixture probability mass inside the circle by polar quadrature.

    Gauss-Legendre in radius crossed with a uniform (periodic, hence
    spectrally accurate) angular rule, refined by doubling until successive
    estimates agree within tol.
    """
    if tol <= 0:
        raise ValueError(f"gmm_mass_in_circle: tol must be > 0, got {tol}")
    if c.radius == 0.0:
        return 0.0
    cx, cy = c.center
    prev = None
    for n_r, n_t in ((16, 32), (32, 64), (64, 128), (128, 256), (256, 512)):
        nodes, wts = np.polynomial.legendre.leggauss(n_r)
        rho = 0.5 * c.radius * (nodes + 1.0)
        w_rho = 0.5 * c.radius * wts
        theta = (np.arange(n_t) + 0.5) * (_TWO_PI / n_t)
        xs = cx + rho[:, None] * np.cos(theta)[None, :]
        ys = cy + rho[:, None] * np.sin(theta)[None, :]
        pts = np.column_stack([xs.ravel(), ys.ravel()])
        vals = g.pdf_batch(pts).reshape(n_r, n_t)
        est = float((w_rho * rho) @ vals.sum(axis=1) * (_TWO_PI / n_t))
        if prev is not None and abs(est - prev) <= 0.5 * tol:
            return min(max(est, 0.0), 1.0)
        prev = est
    return min(max(prev, 0.0), 1.0)


class BufferedDraws:
    """Block-buffered view of a Generator for scalar-heavy sampling loops.

    Emits the same variate sequence as repeated scalar calls on the wrapped
    generator (numpy fills arrays from the bit stream sequentially), but
    amortizes the per-call overhead across blocks.
    """

    __slots__ = ("_rng", "_uni", "_iu", "_nrm", "_in")
    BLOCK = 256

    def __init__(self, rng: np.random.Generator) -> None:
        self._rng = rng
        self._uni = rng.random(self.BLOCK)
        self._iu = 0
        self._nrm = rng.standard_normal(self.BLOCK)
        self._in = 0

    def random(self) -> float:
        if self._iu >= self.BLOCK:
            self._uni = self._rng.random(self.BLOCK)
            self._iu = 0
        v = self._uni[self._iu]
        self._iu += 1
        return v

    def normal(self, loc: float, scale: float) -> float:
        if self._in >= self.BLOCK:
            self._nrm = self._rng.standard_normal(self.BLOCK)
            self._in = 0
        v = self._nrm[self._in]
        self._in += 1
        return loc + scale * v


def uniform_disk_sample(rng, cx: float, cy: float, r: float) -> tuple[float, float]:
    """Uniform point on a disk; draw order (radius, angle) is part of the
    reproducibility contract shared by the estimators. ``rng`` may be a
    Generator or a BufferedDraws view."""
    rad = r * math.sqrt(rng.random())
    ang = _TWO_PI * rng.random()
    return cx + rad * math.cos(ang), cy + rad * math.sin(ang)


class _RejectionGuard:
    """Tracks acceptance across one sampling run to detect degenerate
    proposals (acceptance below 1e-3 after 1e5 attempts)."""

    __slots__ = ("attempts", "accepted")

    MAX_ATTEMPTS = 100_000
    MIN_RATE = 1e-3

    def __init__(self) -> None:
        self.attempts = 0
        self.accepted = 0

    def check(self) -> None:
        if self.attempts >= self.MAX_ATTEMPTS and self.accepted < self.MIN_RATE * self.attempts:
            raise DegenerateProposalError(
                f"proposal acceptance rate {self.accepted}/{self.attempts} below "
                f"{self.MIN_RATE}; mixture mass lies essentially outside the circle")


@dataclass(frozen=True)
class DefensiveMixture:
    """alpha * gmm + (1-alpha) * uniform on a mobility circle.

    ``g_mass`` is the gmm mass inside the circle (computed on construction in
    renormalized mode); ``normalizer`` is Z = alpha * g_mass + (1-alpha), the
    total mass the un-normalized density puts on the circle.
    """

    alpha: float
    gmm: GaussianMixture2D
    circle: MobilityCircle
    renormalize: bool = True
    mass_tol: float = 1e-4
    g_mass: float = field(init=False)
    normalizer: float = field(init=False)

    def __post_init__(self) -> None:
        if not (0.0 <= self.alpha < 1.0):
            raise ConfigError(f"mixture.alpha: must be in [0, 1), got {self.alpha}")
        if self.circle.radius <= 0.0:
            raise ConfigError("mixture: degenerate circle (radius 0) has no density")
        if self.renormalize and self.alpha > 0.0:
            g_mass = gmm_mass_in_circle(self.gmm, self.circle, self.mass_tol)
        else:
            g_mass = float("nan") if not self.renormalize else 1.0
        z = self.alpha * g_mass + (1.0 - self.alpha) if self.renormalize else 1.0
        object.__setattr__(self, "g_mass", g_mass)
        object.__setattr__(self, "normalizer", z)

    @property
    def area(self) -> float:
        return self.circle.area

    @property
    def uniform_density(self) -> float:
        return 1.0 / self.area

    def density(self, x: float, y: float) -> float:
        """Proposal density at a point of the circle (1/m^2)."""
        if not self.circle.contains(x, y):
            raise ValueError("mixture.density: point outside the mobility circle")
        q = self.alpha * self.gmm.pdf(x, y) + (1.0 - self.alpha) * self.uniform_density
        return q / self.normalizer

    def density_batch(self, points: np.ndarray) -> np.ndarray:
        q = self.alpha * self.gmm.pdf_batch(points) + (1.0 - self.alpha) * self.uniform_density
        return q / self.normalizer

    def weight_bound(self) -> float:
        """Supremum of importance weights (1/A)/q over the circle."""
        return self.normalizer / (1.0 - self.alpha)

    def sample_point(self, rng,
                     guard: _RejectionGuard | None = None) -> tuple[float, float]:
        """One draw: with probability alpha sample the mixture, otherwise
        uniform on the circle; redraw the whole procedure while the point
        falls outside the circle.

        With alpha == 0 no branch variate is consumed, so the draw stream
        coincides with plain uniform-disk sampling. ``rng`` may be a
        Generator or a BufferedDraws view.
        """
        cx, cy = self.circle.center
        r = self.circle.radius
        gmm = self.gmm
        alpha = self.alpha
        while True:
            if guard is not None:
                guard.attempts += 1
            if alpha > 0.0 and rng.random() < alpha:
                i = gmm.sample_component(rng)
                _, mx, my, ax, ay = gmm._comps[i]
                sx = math.sqrt(0.5 / ax)
                sy = math.sqrt(0.5 / ay)
                x = rng.normal(mx, sx)
                y = rng.normal(my, sy)
            else:
                x, y = uniform_disk_sample(rng, cx, cy, r)
            dx = x - cx
            dy = y - cy
            if dx * dx + dy * dy <= r * r:
                if guard is not None:
                    guard.accepted += 1
                return x, y
            if guard is not None:
                guard.check()

    def sample_n(self, n: int, rng: np.random.Generator) -> np.ndarray:
        guard = _RejectionGuard()
        draws = BufferedDraws(rng)
        out = np.empty((n, 2))
        for i in range(n):
            out[i] = self.sample_point(draws, guard)
        return out


def sample_mixture(q: DefensiveMixture, rng: np.random.Generator) -> tuple[float, float]:
    """Functional form of DefensiveMixture.sample_point (no degeneracy guard)."""
    return q.sample_point(rng)


def mixture_density(q: DefensiveMixture, z: tuple[float, float]) -> float:
    """Functional form of DefensiveMixture.density."""
    return q.density(float(z[0]), float(z[1]))
