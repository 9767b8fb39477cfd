"""Pure-numpy implementations of the hot kernels.

Semantics here are the reference; the compiled extension in ``_native.pyx``
must match them exactly. Grid traversal works in continuous grid coordinates
(u, v) where cell (row r, col c) covers u in [c, c+1) and v in [r, r+1).
"""

import numpy as np

# Cell label codes shared with the sensor module.
UNKNOWN, FREE, OCCUPIED, WINDOW = 0, 1, 2, 3

BACKEND = "fallback"


def cast_rays(ox, oy, angles, segments, max_range):
    """Intersect rays from (ox, oy) against line segments.

    angles: (R,) ray directions in radians.
    segments: (S, 4) rows (x, y, x', y').
    Returns (dist, hit): dist is the distance to the nearest intersection,
    max_range for misses; hit is a uint8 mask.
    """
    angles = np.asarray(angles, dtype=np.float64)
    segments = np.asarray(segments, dtype=np.float64).reshape(-1, 4)
    n_rays = angles.shape[0]
    dist = np.full(n_rays, float(max_range))
    hit = np.zeros(n_rays, dtype=np.uint8)
    if segments.shape[0] == 0:
        return dist, hit

    dx = np.cos(angles)[:, None]
    dy = np.sin(angles)[:, None]
    px = segments[None, :, 0] - ox
    py = segments[None, :, 1] - oy
    ex = (segments[:, 2] - segments[:, 0])[None, :]
    ey = (segments[:, 3] - segments[:, 1])[None, :]

    denom = dx * ey - dy * ex
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (px * ey - py * ex) / denom
        u = (px * dy - py * dx) / denom
    valid = (np.abs(denom) > 1e-12) & (t > 1e-9) & (t <= max_range)
    valid &= (u >= 0.0) & (u <= 1.0)
    t = np.where(valid, t, np.inf)
    best = t.min(axis=1)
    struck = np.isfinite(best)
    dist[struck] = best[struck]
    hit[struck] = 1
    return dist, hit


def _traverse(u0, v0, u1, v1):
    """Amanatides-Woo grid walk; yields (r, c) from start to end cell."""
    c = int(np.floor(u0))
    r = int(np.floor(v0))
    c_end = int(np.floor(u1))
    r_end = int(np.floor(v1))
    du = u1 - u0
    dv = v1 - v0
    step_c = 1 if du > 0 else -1
    step_r = 1 if dv > 0 else -1
    if du != 0:
        t_delta_c = abs(1.0 / du)
        t_max_c = ((c + (step_c > 0)) - u0) / du
    else:
        t_delta_c = np.inf
        t_max_c = np.inf
    if dv != 0:
        t_delta_r = abs(1.0 / dv)
        t_max_r = ((r + (step_r > 0)) - v0) / dv
    else:
        t_delta_r = np.inf
        t_max_r = np.inf

    n_cells = abs(r_end - r) + abs(c_end - c) + 1
    for _ in range(n_cells):
        yield r, c
        if r == r_end and c == c_end:
            break
        if t_max_c < t_max_r:
            c += step_c
            t_max_c += t_delta_c
        else:
            r += step_r
            t_max_r += t_delta_r


def integrate_rays(labels, origin_uv, ends_uv, hit, window, only_unknown=False):
    """March rays into a label raster, marking Free/Occupied/Window cells.

    labels: (H, W) int8 raster, mutated in place.
    origin_uv: (u, v) ray origin in grid coordinates.
    ends_uv: (R, 2) ray endpoints in grid coordinates.
    hit/window: (R,) uint8 flags; a window hit labels the terminal cell
    Window, any other hit labels it Occupied.

    Labels are sticky under the precedence Window > Occupied > Free >
    Unknown, which makes integration order-insensitive. With only_unknown,
    cells change only when currently Unknown.
    """
    h, w = labels.shape
    u0, v0 = float(origin_uv[0]), float(origin_uv[1])
    ends_uv = np.asarray(ends_uv, dtype=np.float64)
    hit = np.asarray(hit, dtype=np.uint8)
    window = np.asarray(window, dtype=np.uint8)

    for i in range(ends_uv.shape[0]):
        cells = list(_traverse(u0, v0, ends_uv[i, 0], ends_uv[i, 1]))
        terminal = cells[-1] if hit[i] else None
        for r, c in cells:
            if not (0 <= r < h and 0 <= c < w):
                continue
            cur = labels[r, c]
            if (r, c) == terminal:
                new = WINDOW if window[i] else OCCUPIED
                if only_unknown:
                    if cur == UNKNOWN:
                        labels[r, c] = new
                elif new > cur:
                    labels[r, c] = new
            elif cur == UNKNOWN:
                labels[r, c] = FREE
