"""Occupancy grid analysis: contour recovery and frontier clustering."""

import zlib
from dataclasses import dataclass

import numpy as np

from .kernels import FREE, OCCUPIED, UNKNOWN, WINDOW

DBSCAN_EPS = 1.5  # cells; captures 8-connectivity
DBSCAN_MIN_PTS = 3
MIN_CLUSTER_CELLS = 3
MAX_CLUSTER_CELLS = 30
EDGE_MARGIN = 5  # clusters whose location is this close to the edge are dropped

# Marching squares case table. Corner bits: 1=TL, 2=TR, 4=BR, 8=BL
# (occupied); edges: t(op), r(ight), b(ottom), l(eft) midpoints.
_CASES = {
    0: [], 15: [],
    1: [("l", "t")], 2: [("t", "r")], 4: [("r", "b")], 8: [("b", "l")],
    3: [("l", "r")], 6: [("t", "b")], 12: [("l", "r")], 9: [("t", "b")],
    7: [("l", "b")], 14: [("t", "l")], 13: [("t", "r")], 11: [("r", "b")],
    # saddles: the center counts as occupied (>= 2 occupied corners), so the
    # occupied diagonal is connected and the free corners are fenced off
    5: [("t", "r"), ("b", "l")],
    10: [("l", "t"), ("r", "b")],
}


@dataclass(frozen=True)
class FrontierCluster:
    cells: tuple  # of (r, c)
    location: tuple  # (r, c), a member cell

    @property
    def size(self):
        return len(self.cells)


def recover_visible_segments(grid):
    """Marching squares over Occupied/Window vs Free cell centers.

    Any 2x2 neighborhood containing an Unknown cell emits nothing. Unit
    contour segments are merged into maximal collinear runs; coordinates are
    in the grid's aligned metric frame.
    """
    labels = grid.labels
    h, w = labels.shape
    occ = (labels == OCCUPIED) | (labels == WINDOW)
    unk = labels == UNKNOWN

    tl = occ[:-1, :-1]
    tr = occ[:-1, 1:]
    br = occ[1:, 1:]
    bl = occ[1:, :-1]
    case = (
        tl.astype(np.int8)
        + 2 * tr.astype(np.int8)
        + 4 * br.astype(np.int8)
        + 8 * bl.astype(np.int8)
    )
    masked = unk[:-1, :-1] | unk[:-1, 1:] | unk[1:, 1:] | unk[1:, :-1]
    case[masked] = 0
    case[case == 15] = 0

    a = grid.cell_size
    half_h = h / 2.0
    half_w = w / 2.0

    def midpoint(r, c, edge):
        # metric coordinates of the square's edge midpoints; the square's
        # corners are the centers of cells (r..r+1, c..c+1)
        if edge == "t":
            return ((c + 1.0 - half_w) * a, (half_h - r - 0.5) * a)
        if edge == "b":
            return ((c + 1.0 - half_w) * a, (half_h - r - 1.5) * a)
        if edge == "l":
            return ((c + 0.5 - half_w) * a, (half_h - r - 1.0) * a)
        return ((c + 1.5 - half_w) * a, (half_h - r - 1.0) * a)

    segments = []
    for r, c in zip(*np.nonzero(case)):
        for e0, e1 in _CASES[int(case[r, c])]:
            segments.append(midpoint(r, c, e0) + midpoint(r, c, e1))
    return merge_collinear_runs(np.array(segments, dtype=np.float64).reshape(-1, 4))


def merge_collinear_runs(segments):
    """Join touching collinear segments into maximal runs."""
    if segments.shape[0] == 0:
        return segments
    groups = {}
    for seg in segments:
        x0, y0, x1, y1 = seg
        ang = np.arctan2(y1 - y0, x1 - x0) % np.pi
        d = np.array([np.cos(ang), np.sin(ang)])
        offset = -d[1] * x0 + d[0] * y0
        key = (round(ang, 6), round(offset, 6))
        t0 = x0 * d[0] + y0 * d[1]
        t1 = x1 * d[0] + y1 * d[1]
        anchor = np.array([x0, y0]) - t0 * d
        groups.setdefault(key, []).append((min(t0, t1), max(t0, t1), anchor, d))
    out = []
    for members in groups.values():
        members.sort(key=lambda m: m[0])
        lo, hi, anchor, d = members[0]
        for m_lo, m_hi, _, _ in members[1:]:
            if m_lo <= hi + 1e-6:
                hi = max(hi, m_hi)
            else:
                p, q = anchor + lo * d, anchor + hi * d
                out.append((p[0], p[1], q[0], q[1]))
                lo, hi = m_lo, m_hi
        p, q = anchor + lo * d, anchor + hi * d
        out.append((p[0], p[1], q[0], q[1]))
    return np.array(out, dtype=np.float64).reshape(-1, 4)


def detect_frontier_cells(grid):
    """Free cells with at least one Free and one Unknown 4-neighbor."""
    labels = grid.labels
    pad = np.full(
        (labels.shape[0] + 2, labels.shape[1] + 2), -1, dtype=np.int8
    )  # out-of-bounds neighbors count as neither free nor unknown
    pad[1:-1, 1:-1] = labels
    neighbors = [pad[:-2, 1:-1], pad[2:, 1:-1], pad[1:-1, :-2], pad[1:-1, 2:]]
    has_free = np.zeros_like(labels, dtype=bool)
    has_unknown = np.zeros_like(labels, dtype=bool)
    for nb in neighbors:
        has_free |= nb == FREE
        has_unknown |= nb == UNKNOWN
    mask = (labels == FREE) & has_free & has_unknown
    return {(int(r), int(c)) for r, c in zip(*np.nonzero(mask))}


def _dbscan(points, eps, min_pts):
    """Plain DBSCAN over integer cell coordinates; row-major deterministic."""
    pts = np.asarray(sorted(points))
    n = len(pts)
    if n == 0:
        return []
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
    neighbor_lists = [np.nonzero(d2[i] <= eps * eps)[0] for i in range(n)]
    core = np.array([len(nb) >= min_pts for nb in neighbor_lists])
    label = np.full(n, -1)
    cluster = 0
    for i in range(n):
        if label[i] != -1 or not core[i]:
            continue
        label[i] = cluster
        queue = list(neighbor_lists[i])
        while queue:
            j = queue.pop(0)
            if label[j] != -1:
                continue
            label[j] = cluster
            if core[j]:
                queue.extend(neighbor_lists[j])
        cluster += 1
    return [
        [tuple(map(int, pts[j])) for j in np.nonzero(label == ci)[0]]
        for ci in range(cluster)
    ]


def kmeans_split(cells, k, iters=20):
    """Deterministic k-means partition of a cell list into k pieces.

    Seeded from a hash of the cluster centroid; assignment ties break by
    centroid index, cells keep row-major order inside each piece. Pieces
    form an exact disjoint partition of the input.
    """
    cells = sorted(cells)
    pts = np.asarray(cells, dtype=np.float64)
    centroid = pts.mean(axis=0)
    seed = zlib.crc32(repr(tuple(np.round(centroid, 6))).encode())
    rng = np.random.default_rng(seed)
    centers = pts[rng.choice(len(pts), size=k, replace=False)]
    assign = np.zeros(len(pts), dtype=int)
    for _ in range(iters):
        d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_assign = np.argmin(d2, axis=1)
        if (new_assign == assign).all():
            assign = new_assign
            break
        assign = new_assign
        for ci in range(k):
            members = pts[assign == ci]
            if len(members):
                centers[ci] = members.mean(axis=0)
    return [
        [cells[i] for i in np.nonzero(assign == ci)[0]]
        for ci in range(k)
        if (assign == ci).any()
    ]


def _location(cells):
    """Member cell nearest the member centroid; ties by row-major order."""
    pts = np.asarray(sorted(cells), dtype=np.float64)
    centroid = pts.mean(axis=0)
    d2 = ((pts - centroid) ** 2).sum(axis=1)
    best = int(np.argmin(d2))  # argmin takes the first (row-major) minimum
    return tuple(int(v) for v in pts[best])


def cluster_frontiers(
    cells,
    grid_shape=None,
    eps=DBSCAN_EPS,
    min_pts=DBSCAN_MIN_PTS,
    min_cells=MIN_CLUSTER_CELLS,
    max_cells=MAX_CLUSTER_CELLS,
    edge_margin=EDGE_MARGIN,
):
    """DBSCAN frontier cells, split oversized clusters, pick locations.

    Clusters below min_cells are discarded; clusters above max_cells are
    split by k-means with k = ceil(size / max_cells). With grid_shape given,
    clusters whose location lies within edge_margin cells of the grid edge
    are dropped.
    """
    clusters = []
    for group in _dbscan(cells, eps, min_pts):
        if len(group) < min_cells:
            continue
        pieces = (
            kmeans_split(group, int(np.ceil(len(group) / max_cells)))
            if len(group) > max_cells
            else [group]
        )
        for piece in pieces:
            if len(piece) < min_cells:
                continue
            clusters.append(
                FrontierCluster(
                    cells=tuple(sorted(piece)), location=_location(piece)
                )
            )
    if grid_shape is not None:
        h, w = grid_shape
        clusters = [
            cl
            for cl in clusters
            if min(cl.location[0], h - 1 - cl.location[0],
                   cl.location[1], w - 1 - cl.location[1]) >= edge_margin
        ]
    return clusters
