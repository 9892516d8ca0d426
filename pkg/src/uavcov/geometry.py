"""Obstacle world and point-to-point line-of-sight queries.

Obstacles are axis-aligned boxes standing on the ground plane. A link is
non-line-of-sight (NLoS) when the open segment between its endpoints
passes through the interior of any box; touching or grazing a face does
not count as blockage, so the blocked set is open and the classification
is stable under the dense-march oracle used in tests.

The Environment is immutable after construction and all queries are pure,
so they are safe to call from any number of threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from uavcov.errors import ConfigError

Vec2 = tuple[float, float]
Vec3 = tuple[float, float, float]


@dataclass(frozen=True)
class Obstacle:
    """Axis-aligned box footprint [x_min,x_max]x[y_min,y_max], z in [0, height]."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float
    height: float

    def __post_init__(self) -> None:
        vals = (self.x_min, self.y_min, self.x_max, self.y_max, self.height)
        if not all(math.isfinite(v) for v in vals):
            raise ConfigError("obstacle: all coordinates must be finite")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ConfigError("obstacle: footprint_min must be strictly below footprint_max componentwise")
        if not self.height > 0:
            raise ConfigError(f"obstacle: height must be > 0, got {self.height}")

    def contains_interior(self, x: float, y: float, z: float) -> bool:
        return (self.x_min < x < self.x_max
                and self.y_min < y < self.y_max
                and 0.0 < z < self.height)


def _segment_hits_box(px: float, py: float, pz: float,
                      qx: float, qy: float, qz: float,
                      box: tuple[float, float, float, float, float]) -> bool:
    """Slab test against the open interior of one box.

    Returns True iff the open segment (p,q) intersects the open box, i.e.
    the parametric entry/exit interval, clipped to (0,1), is non-empty
    under strict inequalities. Grazing a face yields an empty open
    interval and counts as clear.
    """
    x0, y0, x1, y1, h = box
    t_enter = 0.0
    t_exit = 1.0
    for p0, d, lo, hi in ((px, qx - px, x0, x1),
                          (py, qy - py, y0, y1),
                          (pz, qz - pz, 0.0, h)):
        if d == 0.0:
            if not (lo < p0 < hi):
                return False
            continue
        ta = (lo - p0) / d
        tb = (hi - p0) / d
        if ta > tb:
            ta, tb = tb, ta
        if ta > t_enter:
            t_enter = ta
        if tb < t_exit:
            t_exit = tb
        if t_enter >= t_exit:
            return False
    return t_enter < t_exit


@dataclass(frozen=True)
class Environment:
    """Square area [0, side]^2 with box obstacles and a UAV altitude band."""

    side: float
    obstacles: tuple[Obstacle, ...]
    altitude_min: float = 22.0
    altitude_max: float = 150.0
    grid_cell: float = 50.0  # spatial-index cell size; <= 0 disables the index

    _boxes: tuple[tuple[float, float, float, float, float], ...] = field(init=False, repr=False)
    _grid: dict | None = field(init=False, repr=False)
    _n_cells: int = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not (math.isfinite(self.side) and self.side > 0):
            raise ConfigError(f"environment.side: must be finite and > 0, got {self.side}")
        if not (0 < self.altitude_min < self.altitude_max):
            raise ConfigError(
                f"environment.altitude bounds: need 0 < min < max, got [{self.altitude_min}, {self.altitude_max}]")
        for i, ob in enumerate(self.obstacles):
            if not (0.0 <= ob.x_min and ob.x_max <= self.side and 0.0 <= ob.y_min and ob.y_max <= self.side):
                raise ConfigError(f"environment.obstacles[{i}]: footprint must lie within [0, {self.side}]^2")
        boxes = tuple((ob.x_min, ob.y_min, ob.x_max, ob.y_max, ob.height) for ob in self.obstacles)
        object.__setattr__(self, "_boxes", boxes)
        object.__setattr__(self, "_grid", None)
        object.__setattr__(self, "_n_cells", 0)
        if self.grid_cell > 0 and self.obstacles:
            object.__setattr__(self, "_grid", self._build_grid())

    def _build_grid(self) -> dict:
        n = max(1, int(math.ceil(self.side / self.grid_cell)))
        object.__setattr__(self, "_n_cells", n)
        grid: dict[tuple[int, int], list[int]] = {}
        for idx, (x0, y0, x1, y1, _h) in enumerate(self._boxes):
            i0 = min(n - 1, max(0, int(x0 / self.grid_cell)))
            i1 = min(n - 1, max(0, int(x1 / self.grid_cell)))
            j0 = min(n - 1, max(0, int(y0 / self.grid_cell)))
            j1 = min(n - 1, max(0, int(y1 / self.grid_cell)))
            for i in range(i0, i1 + 1):
                for j in range(j0, j1 + 1):
                    grid.setdefault((i, j), []).append(idx)
        return grid

    # -- candidate pruning -------------------------------------------------

    def _grid_candidates(self, px: float, py: float, qx: float, qy: float) -> list[int]:
        """Indices of boxes whose grid cell is crossed by the 2D projection
        of the segment (Amanatides-Woo traversal, clipped to the grid)."""
        cell = self.grid_cell
        n = self._n_cells
        grid = self._grid
        # Clip the 2D segment to the grid extent [0, n*cell]^2.
        t0, t1 = 0.0, 1.0
        for p0, d, lo, hi in ((px, qx - px, 0.0, n * cell), (py, qy - py, 0.0, n * cell)):
            if d == 0.0:
                if not (lo <= p0 <= hi):
                    return []
                continue
            ta = (lo - p0) / d
            tb = (hi - p0) / d
            if ta > tb:
                ta, tb = tb, ta
            t0 = max(t0, ta)
            t1 = min(t1, tb)
            if t0 > t1:
                return []
        sx = px + t0 * (qx - px)
        sy = py + t0 * (qy - py)
        ex = px + t1 * (qx - px)
        ey = py + t1 * (qy - py)
        i = min(n - 1, max(0, int(sx / cell)))
        j = min(n - 1, max(0, int(sy / cell)))
        i_end = min(n - 1, max(0, int(ex / cell)))
        j_end = min(n - 1, max(0, int(ey / cell)))
        dx = ex - sx
        dy = ey - sy
        step_i = 1 if dx > 0 else -1
        step_j = 1 if dy > 0 else -1
        t_max_x = math.inf if dx == 0 else (((i + (step_i > 0)) * cell - sx) / dx)
        t_max_y = math.inf if dy == 0 else (((j + (step_j > 0)) * cell - sy) / dy)
        t_dx = math.inf if dx == 0 else abs(cell / dx)
        t_dy = math.inf if dy == 0 else abs(cell / dy)
        out: list[int] = []
        seen: set[int] = set()
        for _ in range(2 * n + 2):
            for idx in grid.get((i, j), ()):
                if idx not in seen:
                    seen.add(idx)
                    out.append(idx)
            if i == i_end and j == j_end:
                break
            if t_max_x <= t_max_y:
                t_max_x += t_dx
                i += step_i
            else:
                t_max_y += t_dy
                j += step_j
            if not (0 <= i < n and 0 <= j < n):
                break
        return out

    def candidate_boxes(self, x_lo: float, y_lo: float, x_hi: float, y_hi: float
                        ) -> list[tuple[float, float, float, float, float]]:
        """Boxes whose footprint overlaps the given 2D rectangle.

        Used by estimators to prune once per query region; any segment whose
        2D projection stays inside the rectangle can only hit these boxes.
        """
        return [b for b in self._boxes
                if b[0] <= x_hi and b[2] >= x_lo and b[1] <= y_hi and b[3] >= y_lo]

    # -- queries -----------------------------------------------------------

    def segment_blocked(self, p: Vec3, q: Vec3) -> bool:
        """True iff the open segment (p,q) passes through any box interior."""
        px, py, pz = float(p[0]), float(p[1]), float(p[2])
        qx, qy, qz = float(q[0]), float(q[1]), float(q[2])
        boxes = self._boxes
        if self._grid is not None:
            for idx in self._grid_candidates(px, py, qx, qy):
                if _segment_hits_box(px, py, pz, qx, qy, qz, boxes[idx]):
                    return True
            return False
        for box in boxes:
            if _segment_hits_box(px, py, pz, qx, qy, qz, box):
                return True
        return False

    def is_nlos(self, uav: Vec3, ground_point: Vec2) -> bool:
        """Blockage indicator for a UAV-to-ground link; ground users sit at z=0."""
        return self.segment_blocked(uav, (float(ground_point[0]), float(ground_point[1]), 0.0))

    def blocked_batch(self, p: Vec3, ground_points: np.ndarray,
                      boxes: list[tuple[float, float, float, float, float]] | None = None) -> np.ndarray:
        """Vectorized NLoS indicator for many ground points against one origin.

        ground_points is (n, 2); returns a bool array of shape (n,). Intended
        for grid oracles and batched reporting, not the per-sample estimator
        loop.
        """
        pts = np.asarray(ground_points, dtype=float)
        n = pts.shape[0]
        if n == 0:
            return np.zeros(0, dtype=bool)
        if boxes is None:
            x_lo = min(float(p[0]), float(pts[:, 0].min()))
            x_hi = max(float(p[0]), float(pts[:, 0].max()))
            y_lo = min(float(p[1]), float(pts[:, 1].min()))
            y_hi = max(float(p[1]), float(pts[:, 1].max()))
            boxes = self.candidate_boxes(x_lo, y_lo, x_hi, y_hi)
        blocked = np.zeros(n, dtype=bool)
        if not boxes:
            return blocked
        origin = np.array([float(p[0]), float(p[1]), float(p[2])])
        targets = np.column_stack([pts, np.zeros(n)])
        d = targets - origin  # (n, 3)
        for x0, y0, x1, y1, h in boxes:
            t_enter = np.zeros(n)
            t_exit = np.ones(n)
            alive = np.ones(n, dtype=bool)
            for ax, (lo, hi) in enumerate(((x0, x1), (y0, y1), (0.0, h))):
                da = d[:, ax]
                par = da == 0.0
                inside_par = lo < origin[ax] < hi
                with np.errstate(divide="ignore", invalid="ignore"):
                    ta = (lo - origin[ax]) / da
                    tb = (hi - origin[ax]) / da
                t_lo = np.minimum(ta, tb)
                t_hi = np.maximum(ta, tb)
                if inside_par:
                    t_lo = np.where(par, -np.inf, t_lo)
                    t_hi = np.where(par, np.inf, t_hi)
                else:
                    alive &= ~par
                    t_lo = np.where(par, np.inf, t_lo)
                    t_hi = np.where(par, -np.inf, t_hi)
                t_enter = np.maximum(t_enter, t_lo)
                t_exit = np.minimum(t_exit, t_hi)
            blocked |= alive & (t_enter < t_exit)
            if blocked.all():
                break
        return blocked


def segment_blocked(p: Vec3, q: Vec3, env: Environment) -> bool:
    """Functional form of Environment.segment_blocked."""
    return env.segment_blocked(p, q)


def is_nlos(uav: Vec3, ground_point: Vec2, env: Environment) -> bool:
    """Functional form of Environment.is_nlos."""
    return env.is_nlos(uav, ground_point)


def march_blocked(p: Vec3, q: Vec3, env: Environment, step: float = 0.01) -> bool:
    """Dense-march blockage oracle: test interior points spaced `step` meters
    along the segment with a strict point-in-box check.

    Independent of the slab test; used as ground truth in verification
    suites. Chords shorter than `step` can slip between samples, so suites
    re-adjudicate disagreements at a finer step. Cost is
    O(length/step * boxes); evaluation is chunked to bound memory.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    length = float(np.linalg.norm(q - p))
    n = max(1, int(math.ceil(length / step)))
    boxes = env.candidate_boxes(min(p[0], q[0]), min(p[1], q[1]),
                                max(p[0], q[0]), max(p[1], q[1]))
    if not boxes:
        return False
    chunk = 200_000
    for start in range(0, n, chunk):
        ts = (np.arange(start, min(start + chunk, n)) + 0.5) / n
        pts = p[None, :] + ts[:, None] * (q - p)[None, :]
        for x0, y0, x1, y1, h in boxes:
            inside = ((x0 < pts[:, 0]) & (pts[:, 0] < x1)
                      & (y0 < pts[:, 1]) & (pts[:, 1] < y1)
                      & (0.0 < pts[:, 2]) & (pts[:, 2] < h))
            if inside.any():
                return True
    return False
