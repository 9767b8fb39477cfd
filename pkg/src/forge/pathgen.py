"""Trajectory generation: waypoint sampling, clearance-aware grid planning.

Paths are planned on an 8-connected raster with a cost that penalizes
proximity to impassable segments, then filtered by length and turn count.
"""

import heapq
from dataclasses import dataclass

import numpy as np
import shapely
from shapely.geometry import Polygon

from .geometry import douglas_peucker, min_distance_to_segments, polyline_length

DEFAULT_RESOLUTION = 0.1  # m / cell
DEFAULT_CLEARANCE = 0.3  # preferred wall clearance, m
DEFAULT_TRUNCATION = 1.0  # clearance-cost truncation distance, m
DEFAULT_COST_WEIGHT = 10.0
DEFAULT_ROBOT_RADIUS = 0.25  # m

MIN_PATH_LENGTH = 5.0  # m
MAX_PATH_LENGTH = 100.0  # m
MIN_TURNS = 3
TURN_ANGLE_DEG = 30.0  # heading change that counts as a turn
SIMPLIFY_TOL = 0.2  # Douglas-Peucker tolerance before turn counting, m

_SQRT2 = float(np.sqrt(2.0))
_STEPS = [
    (-1, 0, 1.0), (1, 0, 1.0), (0, -1, 1.0), (0, 1, 1.0),
    (-1, -1, _SQRT2), (-1, 1, _SQRT2), (1, -1, _SQRT2), (1, 1, _SQRT2),
]


class UnreachableError(RuntimeError):
    pass


@dataclass(frozen=True)
class NavGrid:
    """Free-space raster with a clearance cost; immutable once built."""

    resolution: float
    origin: np.ndarray  # world position of cell (0, 0)'s corner
    free: np.ndarray  # (H, W) bool
    cost: np.ndarray  # (H, W) float, >= 1 on free cells, inf elsewhere

    def cell_center(self, rc):
        r, c = rc
        return self.origin + (np.array([c, r]) + 0.5) * self.resolution

    def world_to_cell(self, xy):
        c, r = np.floor((np.asarray(xy) - self.origin) / self.resolution).astype(int)
        return int(r), int(c)


@dataclass(frozen=True)
class Path:
    waypoints: np.ndarray  # (N, 2) world polyline
    cost: float

    @property
    def length(self):
        return polyline_length(self.waypoints)

    @property
    def turn_count(self):
        return count_turns(self.waypoints)


def count_turns(points, simplify_tol=SIMPLIFY_TOL, turn_deg=TURN_ANGLE_DEG):
    """Heading changes above turn_deg on the simplified polyline."""
    pts = douglas_peucker(points, simplify_tol)
    if pts.shape[0] < 3:
        return 0
    d = np.diff(pts, axis=0)
    headings = np.arctan2(d[:, 1], d[:, 0])
    dh = np.diff(headings)
    dh = (dh + np.pi) % (2 * np.pi) - np.pi
    return int((np.abs(np.degrees(dh)) > turn_deg).sum())


def build_navgrid(
    plan,
    resolution=DEFAULT_RESOLUTION,
    clearance=DEFAULT_CLEARANCE,
    truncation=DEFAULT_TRUNCATION,
    cost_weight=DEFAULT_COST_WEIGHT,
    robot_radius=DEFAULT_ROBOT_RADIUS,
):
    """Rasterize a plan into a cost grid.

    cost = 1 + w * max(0, truncation - d_wall) on free cells; a cell is free
    when its center is inside the building and at least robot_radius from
    every impassable segment.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    if not clearance <= truncation:
        raise ValueError("need clearance <= truncation")
    ring = plan.perimeter
    if ring.shape[0] < 4:
        raise ValueError("plan has no perimeter")
    lo = ring.min(axis=0) - resolution
    hi = ring.max(axis=0) + resolution
    w = int(np.ceil((hi[0] - lo[0]) / resolution))
    h = int(np.ceil((hi[1] - lo[1]) / resolution))
    cols, rows = np.meshgrid(np.arange(w), np.arange(h))
    centers = np.column_stack(
        [
            lo[0] + (cols.ravel() + 0.5) * resolution,
            lo[1] + (rows.ravel() + 0.5) * resolution,
        ]
    )
    d_wall = min_distance_to_segments(centers, plan.impassable_segments).reshape(h, w)
    inside = shapely.contains_xy(Polygon(ring), centers[:, 0], centers[:, 1]).reshape(h, w)
    free = inside & (d_wall >= robot_radius)
    cost = np.where(free, 1.0 + cost_weight * np.maximum(0.0, truncation - d_wall), np.inf)
    return NavGrid(resolution=resolution, origin=lo, free=free, cost=cost)


def free_cell_centers(grid):
    rr, cc = np.nonzero(grid.free)
    return grid.origin + (np.column_stack([cc, rr]) + 0.5) * grid.resolution


def sample_waypoints(plan, k, seed, grid=None):
    """Farthest-point-sampled free-space points; seed picks the first."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if grid is None:
        grid = build_navgrid(plan)
    candidates = free_cell_centers(grid)
    if candidates.shape[0] == 0:
        raise ValueError("plan has no free space")
    return farthest_point_sample(candidates, k, seed)


def farthest_point_sample(candidates, k, seed):
    """Greedy max-min sampling from a candidate point set."""
    candidates = np.asarray(candidates, dtype=np.float64).reshape(-1, 2)
    n = candidates.shape[0]
    k = min(k, n)
    rng = np.random.default_rng(seed)
    chosen = [int(rng.integers(n))]
    d = np.hypot(*(candidates - candidates[chosen[0]]).T)
    for _ in range(k - 1):
        nxt = int(np.argmax(d))
        chosen.append(nxt)
        d = np.minimum(d, np.hypot(*(candidates - candidates[nxt]).T))
    return candidates[chosen]


def shortest_path(grid, a, b):
    """Minimum-accumulated-cost 8-connected path between world points.

    Edge weight is the mean of the endpoint cell costs times the step length
    in cells (diagonals x sqrt(2)), which makes the metric symmetric.
    """
    start = grid.world_to_cell(a)
    goal = grid.world_to_cell(b)
    h, w = grid.free.shape
    for name, (r, c) in (("start", start), ("goal", goal)):
        if not (0 <= r < h and 0 <= c < w) or not grid.free[r, c]:
            raise UnreachableError(f"{name} cell {(r, c)} is not free")
    if start == goal:
        return Path(waypoints=np.array([grid.cell_center(start)]), cost=0.0)

    cost = grid.cost
    dist = np.full((h, w), np.inf)
    dist[start] = 0.0
    prev = {}
    heap = [(0.0, start)]
    while heap:
        d, (r, c) = heapq.heappop(heap)
        if (r, c) == goal:
            break
        if d > dist[r, c]:
            continue
        for dr, dc, sl in _STEPS:
            nr, nc = r + dr, c + dc
            if not (0 <= nr < h and 0 <= nc < w) or not grid.free[nr, nc]:
                continue
            nd = d + sl * 0.5 * (cost[r, c] + cost[nr, nc])
            if nd < dist[nr, nc]:
                dist[nr, nc] = nd
                prev[(nr, nc)] = (r, c)
                heapq.heappush(heap, (nd, (nr, nc)))
    if not np.isfinite(dist[goal]):
        raise UnreachableError(f"no path from {tuple(a)} to {tuple(b)}")

    cells = [goal]
    while cells[-1] != start:
        cells.append(prev[cells[-1]])
    cells.reverse()
    pts = np.array([grid.cell_center(rc) for rc in cells])
    return Path(waypoints=pts, cost=float(dist[goal]))


def filter_paths(paths):
    """Keep paths 5-100 m long with at least 3 turns."""
    return [
        p
        for p in paths
        if MIN_PATH_LENGTH <= p.length <= MAX_PATH_LENGTH and p.turn_count >= MIN_TURNS
    ]


def generate_paths(plan, k_waypoints=12, seed=0, grid=None, **nav_kwargs):
    """Waypoints + all-pairs Dijkstra + filtering, in one call."""
    if grid is None:
        grid = build_navgrid(plan, **nav_kwargs)
    waypoints = sample_waypoints(plan, k_waypoints, seed, grid=grid)
    paths = []
    for i in range(len(waypoints)):
        for j in range(i + 1, len(waypoints)):
            try:
                paths.append(shortest_path(grid, waypoints[i], waypoints[j]))
            except UnreachableError:
                continue
    return filter_paths(paths)
