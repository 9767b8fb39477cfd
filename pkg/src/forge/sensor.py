"""Virtual 360-degree LIDAR, axis alignment, and occupancy grid rendering.

The robot walks a path; at fixed arc-length steps a scan is cast against the
plan's occluders, the world-to-grid alignment angle is re-estimated from all
accumulated hit points, and a robot-centered labeled grid is re-rendered
from the stored scans in the aligned frame.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import mapops
from .geometry import clip_segment_to_box, min_distance_to_segments, rotate
from .kernels import FREE, OCCUPIED, UNKNOWN, WINDOW, cast_rays, integrate_rays

WINDOW_HIT_TOL = 0.01  # hit within 10 mm of an exterior window labels Window
NEIGHBOR_PAIR_MAX_DIST = 0.3  # m, for alignment pairs
ALIGN_BINS = 90  # 1-degree bins over [0, 90)
MIN_TARGET_PIECE = 0.01  # m, shorter target remnants are dropped

LABELS = {"unknown": UNKNOWN, "free": FREE, "occupied": OCCUPIED, "window": WINDOW}


@dataclass(frozen=True)
class SensorConfig:
    max_range: float = 4.5
    n_rays: int = 720
    step: float = 0.8
    grid_size: int = 121
    area: float = 15.0
    window_termination: str = "exterior"


@dataclass(frozen=True)
class LidarScan:
    origin: np.ndarray  # (2,) world
    angles: np.ndarray  # (R,)
    dist: np.ndarray  # (R,) distance to hit, max_range on miss
    hit: np.ndarray  # (R,) uint8
    window: np.ndarray  # (R,) uint8, hit near an exterior window
    max_range: float

    @property
    def points(self):
        """Ray endpoints (hits and range-limited misses)."""
        d = np.column_stack([np.cos(self.angles), np.sin(self.angles)])
        return self.origin + self.dist[:, None] * d

    @property
    def hit_points(self):
        return self.points[self.hit.astype(bool)]

    def endpoints_in(self, offset, angle):
        return rotate(self.points - offset, angle)


@dataclass
class OccupancyGrid:
    labels: np.ndarray  # (H, W) int8
    area: float  # metric extent, m (square)
    center: np.ndarray  # world position of the grid center
    alignment: float = 0.0  # radians

    @classmethod
    def blank(cls, size, area, center=(0.0, 0.0), alignment=0.0):
        return cls(
            labels=np.zeros((size, size), dtype=np.int8),
            area=float(area),
            center=np.asarray(center, dtype=np.float64),
            alignment=float(alignment),
        )

    @property
    def size(self):
        return self.labels.shape[0]

    @property
    def scale(self):
        """Cells per meter."""
        return self.labels.shape[0] / self.area

    @property
    def cell_size(self):
        return self.area / self.labels.shape[0]

    def uv(self, points):
        """Aligned-frame metric points -> continuous grid (u=col, v=row)."""
        points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        h, w = self.labels.shape
        u = w / 2.0 + self.scale * points[:, 0]
        v = h / 2.0 - self.scale * points[:, 1]
        return np.column_stack([u, v])

    def cell_center_xy(self, r, c):
        """Aligned-frame metric center of cell (r, c)."""
        h, w = self.labels.shape
        return np.array(
            [(c + 0.5 - w / 2.0) / self.scale, (h / 2.0 - r - 0.5) / self.scale]
        )

    def known_count(self):
        return int((self.labels != UNKNOWN).sum())

    def copy(self):
        return replace(self, labels=self.labels.copy())


@dataclass(frozen=True)
class Sample:
    grid: OccupancyGrid
    visible_segments: np.ndarray  # (N, 4) aligned robot frame
    target_segments: np.ndarray  # (M, 4) aligned robot frame
    trajectory: np.ndarray  # (K, 2) aligned robot frame
    plan_id: str
    step_index: int
    pose: np.ndarray  # (2,) world
    alpha_deg: float


def cast_scan(plan, origin, max_range=4.5, n_rays=720, window_termination="exterior"):
    """Cast a uniform 360-degree scan against a plan's occluders."""
    if n_rays < 1:
        raise ValueError("n_rays must be >= 1")
    origin = np.asarray(origin, dtype=np.float64)
    occluders = plan.occluder_segments(window_termination)
    angles = np.linspace(0.0, 2 * np.pi, n_rays, endpoint=False)
    dist, hit = cast_rays(origin[0], origin[1], angles, occluders, max_range)
    window = np.zeros(n_rays, dtype=np.uint8)
    windows = plan.exterior_window_segments
    if windows.shape[0] and hit.any():
        d = np.column_stack([np.cos(angles), np.sin(angles)])
        pts = origin + dist[:, None] * d
        mask = hit.astype(bool)
        near = min_distance_to_segments(pts[mask], windows) <= WINDOW_HIT_TOL
        window[mask] = near.astype(np.uint8)
    return LidarScan(
        origin=origin, angles=angles, dist=dist, hit=hit,
        window=window, max_range=float(max_range),
    )


def _pair_angles_deg(scan):
    """Angles (deg, mod 90) of lines through neighboring hit pairs."""
    pts = scan.points
    ok = scan.hit.astype(bool)
    n = len(pts)
    if n < 2:
        return np.empty(0)
    nxt = np.roll(np.arange(n), -1)
    both = ok & ok[nxt]
    d = pts[nxt] - pts
    close = np.hypot(d[:, 0], d[:, 1]) <= NEIGHBOR_PAIR_MAX_DIST
    sel = both & close
    return np.degrees(np.arctan2(d[sel, 1], d[sel, 0])) % 90.0


def estimate_alignment(scans):
    """Dominant wall direction modulo 90 degrees, from one or more scans.

    Histogram of neighboring-hit-pair line angles; the result is the
    frequency-weighted circular average of the mode bin and its neighbors.
    Returns (alpha_deg in [0, 90), confident).
    """
    if not isinstance(scans, (list, tuple)):
        scans = [scans]
    angs = np.concatenate([_pair_angles_deg(s) for s in scans] or [np.empty(0)])
    if angs.size < 1:
        return 0.0, False
    bins = np.bincount(np.floor(angs).astype(int) % ALIGN_BINS, minlength=ALIGN_BINS)
    mode = int(np.argmax(bins))
    sel = [(mode - 1) % ALIGN_BINS, mode, (mode + 1) % ALIGN_BINS]
    w = bins[sel].astype(float)
    # circular mean over a 90-degree period: scale bin centers by 4 onto the circle
    phi = np.radians((np.array(sel) + 0.5) * 4.0)
    alpha = np.degrees(np.arctan2((w * np.sin(phi)).sum(), (w * np.cos(phi)).sum())) / 4.0
    return float(alpha % 90.0), True


def integrate_scan(grid, scan, only_unknown=False):
    """Ray-march a scan (already in the grid's aligned frame) into the grid.

    Incident cells become Free; terminal cells of hits become Occupied or
    Window per the scan's window flags. Known labels are sticky.
    """
    origin_uv = grid.uv(scan.origin)[0]
    ends_uv = grid.uv(scan.points)
    integrate_rays(grid.labels, origin_uv, ends_uv, scan.hit, scan.window, only_unknown)
    return grid


def render_grid(scans, center, alpha_deg, size, area):
    """Render a grid at `center` from scans rotated by -alpha about center."""
    grid = OccupancyGrid.blank(size, area, center=center, alignment=np.radians(alpha_deg))
    half_diag = area * np.sqrt(2.0) / 2.0
    ang = -np.radians(alpha_deg)
    for scan in scans:
        if np.hypot(*(scan.origin - center)) > scan.max_range + half_diag:
            continue  # scan cannot touch this grid
        origin_uv = grid.uv(rotate(scan.origin - center, ang))[0]
        ends_uv = grid.uv(scan.endpoints_in(center, ang))
        integrate_rays(grid.labels, origin_uv, ends_uv, scan.hit, scan.window, False)
    return grid


def chromatize(grid):
    """Cell labels -> 3-channel pseudo-colors in {-1, +1}^3."""
    table = np.array(
        [
            [-1.0, -1.0, -1.0],  # Unknown
            [-1.0, +1.0, -1.0],  # Free
            [-1.0, -1.0, +1.0],  # Occupied
            [+1.0, -1.0, +1.0],  # Window
        ]
    )
    return table[grid.labels]


def _grid_line_params(x0, y0, x1, y1, lines):
    """Intersection parameters of a segment with vertical/horizontal lines."""
    ts = []
    for axis, (a0, a1) in enumerate(((x0, x1), (y0, y1))):
        if a1 == a0:
            continue
        t = (lines - a0) / (a1 - a0)
        ts.extend(t[(t > 1e-12) & (t < 1 - 1e-12)])
    return ts


def clip_targets(segments, grid):
    """Clip target segments to the grid extent and against Occupied cells.

    A subsegment (cut at cell boundaries) is removed when its midpoint lies
    in an Occupied cell; contiguous survivors are re-joined and remnants
    shorter than 1 cm dropped.
    """
    half = grid.area / 2.0
    a = grid.cell_size
    h, w = grid.labels.shape
    boundaries = -half + a * np.arange(1, h)
    out = []
    for seg in np.asarray(segments, dtype=np.float64).reshape(-1, 4):
        clipped = clip_segment_to_box(*seg, -half, half, -half, half)
        if clipped is None:
            continue
        x0, y0, x1, y1 = clipped
        ts = sorted(
            set(
                _grid_line_params(x0, y0, x1, y1, boundaries)
            )
        )
        cuts = [0.0] + ts + [1.0]
        runs = []
        for t0, t1 in zip(cuts[:-1], cuts[1:]):
            tm = 0.5 * (t0 + t1)
            mx = x0 + tm * (x1 - x0)
            my = y0 + tm * (y1 - y0)
            u = int(np.floor(w / 2.0 + grid.scale * mx))
            v = int(np.floor(h / 2.0 - grid.scale * my))
            occupied = (
                0 <= v < h and 0 <= u < w and grid.labels[v, u] == OCCUPIED
            )
            if occupied:
                runs.append(None)
            elif runs and runs[-1] is not None:
                runs[-1] = (runs[-1][0], t1)
            else:
                runs.append((t0, t1))
        for run in runs:
            if run is None:
                continue
            t0, t1 = run
            piece = (
                x0 + t0 * (x1 - x0), y0 + t0 * (y1 - y0),
                x0 + t1 * (x1 - x0), y0 + t1 * (y1 - y0),
            )
            if np.hypot(piece[2] - piece[0], piece[3] - piece[1]) >= MIN_TARGET_PIECE:
                out.append(piece)
    return np.array(out, dtype=np.float64).reshape(-1, 4)


def path_steps(waypoints, step):
    """Points at arc-length multiples of `step` along a polyline."""
    pts = np.asarray(waypoints, dtype=np.float64).reshape(-1, 2)
    if pts.shape[0] == 1:
        return pts.copy()
    seg = np.diff(pts, axis=0)
    seglen = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(seglen)])
    total = cum[-1]
    n = int(np.floor(total / step + 1e-9)) + 1
    s_values = np.arange(n) * step
    out = []
    for s in s_values:
        i = min(np.searchsorted(cum, s, side="right") - 1, len(seglen) - 1)
        t = 0.0 if seglen[i] == 0 else (s - cum[i]) / seglen[i]
        out.append(pts[i] + t * seg[i])
    return np.array(out)


def simulate_trajectory(plan, path, config=SensorConfig(), trajectory_id=0):
    """Yield a Sample at each sensor step along a path."""
    if config.step <= 0:
        raise ValueError("step must be positive")
    waypoints = path.waypoints if hasattr(path, "waypoints") else np.asarray(path)
    poses = path_steps(waypoints, config.step)
    scans = []
    targets_world = plan.occluder_segments(config.window_termination)
    for i, pose in enumerate(poses):
        scans.append(
            cast_scan(
                plan, pose, config.max_range, config.n_rays, config.window_termination
            )
        )
        alpha_deg, _ok = estimate_alignment(scans)
        grid = render_grid(scans, pose, alpha_deg, config.grid_size, config.area)
        ang = -np.radians(alpha_deg)
        targets_local = np.hstack(
            [
                rotate(targets_world[:, 0:2] - pose, ang),
                rotate(targets_world[:, 2:4] - pose, ang),
            ]
        ) if targets_world.shape[0] else np.empty((0, 4))
        target_segments = clip_targets(targets_local, grid)
        visible = mapops.recover_visible_segments(grid)
        yield Sample(
            grid=grid,
            visible_segments=visible,
            target_segments=target_segments,
            trajectory=rotate(poses[: i + 1] - pose, ang),
            plan_id=plan.plan_id,
            step_index=i,
            pose=pose.copy(),
            alpha_deg=alpha_deg,
        )
