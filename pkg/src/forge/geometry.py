"""Small 2D geometry helpers shared across modules."""

import numpy as np


def seg_lengths(segments):
    """Lengths of an (N, 4) segment array."""
    segments = np.asarray(segments, dtype=np.float64).reshape(-1, 4)
    return np.hypot(segments[:, 2] - segments[:, 0], segments[:, 3] - segments[:, 1])


def point_segment_distance(points, segments):
    """Distance from each point to each segment.

    points: (P, 2); segments: (S, 4). Returns (P, S).
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    segments = np.asarray(segments, dtype=np.float64).reshape(-1, 4)
    p = points[:, None, :]
    a = segments[None, :, 0:2]
    b = segments[None, :, 2:4]
    ab = b - a
    denom = (ab * ab).sum(axis=2)
    denom = np.where(denom == 0.0, 1.0, denom)
    t = ((p - a) * ab).sum(axis=2) / denom
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[:, :, None] * ab
    return np.hypot(*(p - closest).transpose(2, 0, 1))


def min_distance_to_segments(points, segments):
    """Distance from each point to the nearest of the given segments."""
    segments = np.asarray(segments, dtype=np.float64).reshape(-1, 4)
    if segments.shape[0] == 0:
        return np.full(np.asarray(points).reshape(-1, 2).shape[0], np.inf)
    return point_segment_distance(points, segments).min(axis=1)


def rotate(points, angle):
    """Rotate (N, 2) points by angle (radians) about the origin."""
    points = np.asarray(points, dtype=np.float64)
    ca, sa = np.cos(angle), np.sin(angle)
    rot = np.array([[ca, -sa], [sa, ca]])
    return points @ rot.T


def rotate_segments(segments, angle):
    segments = np.asarray(segments, dtype=np.float64).reshape(-1, 4)
    out = np.empty_like(segments)
    out[:, 0:2] = rotate(segments[:, 0:2], angle)
    out[:, 2:4] = rotate(segments[:, 2:4], angle)
    return out


def translate_segments(segments, offset):
    segments = np.asarray(segments, dtype=np.float64).reshape(-1, 4)
    out = segments.copy()
    out[:, 0] += offset[0]
    out[:, 2] += offset[0]
    out[:, 1] += offset[1]
    out[:, 3] += offset[1]
    return out


def clip_segment_to_box(x0, y0, x1, y1, xmin, xmax, ymin, ymax):
    """Liang-Barsky clip; returns clipped endpoints or None."""
    dx = x1 - x0
    dy = y1 - y0
    t0, t1 = 0.0, 1.0
    for p, q in (
        (-dx, x0 - xmin),
        (dx, xmax - x0),
        (-dy, y0 - ymin),
        (dy, ymax - y0),
    ):
        if p == 0.0:
            if q < 0.0:
                return None
            continue
        t = q / p
        if p < 0.0:
            if t > t1:
                return None
            t0 = max(t0, t)
        else:
            if t < t0:
                return None
            t1 = min(t1, t)
    return (x0 + t0 * dx, y0 + t0 * dy, x0 + t1 * dx, y0 + t1 * dy)


def polyline_length(points):
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if points.shape[0] < 2:
        return 0.0
    return float(np.hypot(*np.diff(points, axis=0).T).sum())


def douglas_peucker(points, tolerance):
    """Polyline simplification; keeps endpoints."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = points.shape[0]
    if n < 3:
        return points.copy()
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        i, j = stack.pop()
        if j <= i + 1:
            continue
        seg = points[[i]].tolist()[0] + points[[j]].tolist()[0]
        d = point_segment_distance(points[i + 1 : j], [seg])[:, 0]
        k = int(np.argmax(d))
        if d[k] > tolerance:
            mid = i + 1 + k
            keep[mid] = True
            stack.append((i, mid))
            stack.append((mid, j))
    return points[keep]


def sample_points_on_segments(segments, spacing):
    """Evenly spaced points along each segment, endpoints included."""
    segments = np.asarray(segments, dtype=np.float64).reshape(-1, 4)
    pts = []
    for x0, y0, x1, y1 in segments:
        n = max(2, int(np.ceil(np.hypot(x1 - x0, y1 - y0) / spacing)) + 1)
        t = np.linspace(0.0, 1.0, n)
        pts.append(np.column_stack([x0 + t * (x1 - x0), y0 + t * (y1 - y0)]))
    if not pts:
        return np.empty((0, 2))
    return np.vstack(pts)


def hausdorff_segments(a, b, spacing):
    """Symmetric Hausdorff distance between two segment sets, by sampling."""
    pa = sample_points_on_segments(a, spacing)
    pb = sample_points_on_segments(b, spacing)
    d_ab = min_distance_to_segments(pa, b).max() if pa.size else 0.0
    d_ba = min_distance_to_segments(pb, a).max() if pb.size else 0.0
    return max(float(d_ab), float(d_ba))
