"""Vector floor plan ingestion and canonicalization.

A plan is a set of rooms, each a closed polygon whose edges are categorized
as wall, door, or window. This module owns the plan JSON schema, doorway
closure, segment canonicalization, and exterior-window classification.
"""

import json
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from shapely.geometry import LineString, Polygon
from shapely.ops import unary_union

from .geometry import min_distance_to_segments, seg_lengths

MERGE_TOL = 1e-3  # vertices closer than 1 mm are identical
EXTERIOR_TOL = 0.1  # window vertices within 100 mm of the perimeter
DOORWAY_MAX_GAP = 2.0  # ‖uu'‖+‖vv'‖ threshold for closing a doorway
COLLINEAR_TOL_DEG = 0.1  # corner-removal angle tolerance


class PlanError(ValueError):
    """Malformed or invalid floor-plan document."""


class SegmentCategory(Enum):
    WALL = "wall"
    DOOR = "door"
    WINDOW = "window"

    @property
    def transparent(self):
        return self in (SegmentCategory.DOOR, SegmentCategory.WINDOW)

    @property
    def passable(self):
        return self is SegmentCategory.DOOR


@dataclass(frozen=True)
class RawFloorPlan:
    """Rooms as closed polygons with per-edge categories."""

    rooms: tuple  # of (vertices (N,2) ndarray, categories tuple)
    extra_segments: tuple = ()  # of (x, y, x', y', SegmentCategory)

    def iter_segments(self):
        for vertices, categories in self.rooms:
            n = len(categories)
            for i in range(n):
                j = (i + 1) % n
                yield (
                    vertices[i, 0],
                    vertices[i, 1],
                    vertices[j, 0],
                    vertices[j, 1],
                    categories[i],
                )
        yield from self.extra_segments


@dataclass(frozen=True)
class FloorPlan:
    """Canonical segment soup with perimeter metadata."""

    segments: np.ndarray  # (N, 4)
    categories: tuple  # of SegmentCategory, length N
    perimeter: np.ndarray  # (M, 2) closed polyline, first == last
    exterior: np.ndarray = None  # (N,) bool, exterior-window flags
    dropped: int = 0  # zero-length segments dropped in canonicalization
    plan_id: str = ""

    def __post_init__(self):
        if self.exterior is None:
            object.__setattr__(
                self, "exterior", np.zeros(len(self.categories), dtype=bool)
            )

    def _mask(self, pred):
        return np.array([pred(c) for c in self.categories], dtype=bool)

    @property
    def impassable_segments(self):
        """Walls and windows; used for path generation."""
        return self.segments[self._mask(lambda c: not c.passable)]

    def occluder_segments(self, window_termination="exterior"):
        """Segments that terminate LIDAR rays.

        window_termination: 'exterior' (walls + exterior windows, default),
        'none' (walls only), or 'all' (walls + every window).
        """
        is_wall = self._mask(lambda c: c is SegmentCategory.WALL)
        if window_termination == "none":
            mask = is_wall
        elif window_termination == "all":
            mask = self._mask(lambda c: c is not SegmentCategory.DOOR)
        elif window_termination == "exterior":
            mask = is_wall | self.exterior
        else:
            raise ValueError(f"bad window_termination: {window_termination!r}")
        return self.segments[mask]

    @property
    def exterior_window_segments(self):
        return self.segments[self.exterior]


def parse_floorplan(document):
    """Parse a plan JSON document (bytes or str) into a RawFloorPlan."""
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise PlanError(f"malformed JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict) or "rooms" not in data:
        raise PlanError("missing top-level 'rooms' field")
    rooms = []
    for ri, room in enumerate(data["rooms"]):
        try:
            vertices = np.asarray(room["vertices"], dtype=np.float64)
            raw_cats = room["edge_categories"]
        except (KeyError, TypeError) as exc:
            raise PlanError(f"rooms[{ri}]: missing vertices/edge_categories") from exc
        if vertices.ndim != 2 or vertices.shape[1] != 2 or vertices.shape[0] < 3:
            raise PlanError(f"rooms[{ri}]: vertices must be an (N>=3, 2) array")
        # Tolerate an explicitly closed ring (last vertex repeats the first).
        if np.allclose(vertices[0], vertices[-1]) and len(raw_cats) == len(vertices) - 1:
            vertices = vertices[:-1]
        if len(raw_cats) != len(vertices):
            raise PlanError(
                f"rooms[{ri}]: {len(raw_cats)} edge_categories for "
                f"{len(vertices)} vertices"
            )
        cats = []
        for ei, cat in enumerate(raw_cats):
            try:
                cats.append(SegmentCategory(cat))
            except ValueError as exc:
                raise PlanError(
                    f"rooms[{ri}].edge_categories[{ei}]: unknown category {cat!r}"
                ) from exc
        rooms.append((vertices, tuple(cats)))
    return RawFloorPlan(rooms=tuple(rooms))


def close_doorways(plan):
    """Append wall segments closing matched door pairs into quadrilaterals.

    Each door uv is matched greedily to its mutual-nearest door u'v' by the
    minimum of ‖uu'‖+‖vv'‖ over both endpoint pairings; matched pairs closer
    than 2 m in that sum get the two connecting walls appended.
    """
    doors = [
        (i, np.array(s[:4], dtype=np.float64))
        for i, s in enumerate(plan.iter_segments())
        if s[4] is SegmentCategory.DOOR
    ]
    if len(doors) < 2:
        return plan

    def pairing_cost(a, b):
        # straight pairing u<->u' and swapped u<->v'
        straight = np.hypot(a[0] - b[0], a[1] - b[1]) + np.hypot(a[2] - b[2], a[3] - b[3])
        swapped = np.hypot(a[0] - b[2], a[1] - b[3]) + np.hypot(a[2] - b[0], a[3] - b[1])
        if swapped < straight:
            return swapped, True
        return straight, False

    candidates = []
    for ai in range(len(doors)):
        for bi in range(ai + 1, len(doors)):
            cost, swap = pairing_cost(doors[ai][1], doors[bi][1])
            candidates.append((cost, ai, bi, swap))
    candidates.sort(key=lambda c: (c[0], c[1], c[2]))

    matched = set()
    extra = list(plan.extra_segments)
    for cost, ai, bi, swap in candidates:
        if ai in matched or bi in matched or cost >= DOORWAY_MAX_GAP:
            continue
        matched.add(ai)
        matched.add(bi)
        a = doors[ai][1]
        b = doors[bi][1]
        if swap:
            b = np.array([b[2], b[3], b[0], b[1]])
        extra.append((a[0], a[1], b[0], b[1], SegmentCategory.WALL))
        extra.append((a[2], a[3], b[2], b[3], SegmentCategory.WALL))
    return replace(plan, extra_segments=tuple(extra))


def _merge_vertices(segments, tol):
    """Cluster vertices within tol and snap each to its cluster mean."""
    pts = np.vstack([segments[:, 0:2], segments[:, 2:4]])
    n = pts.shape[0]
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    order = np.lexsort((pts[:, 1], pts[:, 0]))
    for oi in range(n):
        i = order[oi]
        for oj in range(oi + 1, n):
            j = order[oj]
            if pts[j, 0] - pts[i, 0] > tol:
                break
            if abs(pts[j, 1] - pts[i, 1]) <= tol and np.hypot(*(pts[j] - pts[i])) <= tol:
                parent[find(i)] = find(j)

    roots = np.array([find(i) for i in range(n)])
    snapped = pts.copy()
    for root in np.unique(roots):
        members = roots == root
        snapped[members] = pts[members].mean(axis=0)
    out = segments.copy()
    out[:, 0:2] = snapped[: len(segments)]
    out[:, 2:4] = snapped[len(segments) :]
    return out

def _line_key(seg, angle_tol_rad, offset_tol):
    """Quantized (direction, offset) key for collinearity grouping."""
    x0, y0, x1, y1 = seg
    ang = np.arctan2(y1 - y0, x1 - x0) % np.pi
    # fold near-pi angles back to 0 so both sides of the seam group together
    if np.pi - ang < angle_tol_rad:
        ang = ang - np.pi
    d = np.array([np.cos(ang), np.sin(ang)])
    normal = np.array([-d[1], d[0]])
    offset = x0 * normal[0] + y0 * normal[1]
    return (round(ang / angle_tol_rad), round(offset / offset_tol)), d


def _join_collinear(segs_with_cat):
    """Merge overlapping or touching collinear same-category segments.

    Also removes non-corner vertices: a chain of collinear segments becomes
    one maximal segment per connected run.
    """
    angle_tol = np.radians(COLLINEAR_TOL_DEG)
    groups = {}
    for seg, cat in segs_with_cat:
        key, d = _line_key(seg, angle_tol, MERGE_TOL)
        groups.setdefault((cat, key), []).append((seg, d))

    out = []
    for (cat, _key), members in groups.items():
        d = members[0][1]
        intervals = []
        for seg, _ in members:
            t0 = seg[0] * d[0] + seg[1] * d[1]
            t1 = seg[2] * d[0] + seg[3] * d[1]
            anchor = np.array(seg[0:2]) - t0 * d
            intervals.append((min(t0, t1), max(t0, t1), anchor))
        intervals.sort(key=lambda iv: iv[0])
        cur_lo, cur_hi, anchor = intervals[0]
        for lo, hi, _ in intervals[1:]:
            if lo <= cur_hi + MERGE_TOL:
                cur_hi = max(cur_hi, hi)
            else:
                p = anchor + cur_lo * d
                q = anchor + cur_hi * d
                out.append(((p[0], p[1], q[0], q[1]), cat))
                cur_lo, cur_hi = lo, hi
        p = anchor + cur_lo * d
        q = anchor + cur_hi * d
        out.append(((p[0], p[1], q[0], q[1]), cat))
    return out


def _compute_perimeter(plan):
    """Outer boundary of the union of room polygons (largest enclosed area)."""
    polys = []
    for vertices, _cats in plan.rooms:
        poly = Polygon(vertices)
        if not poly.is_valid:
            poly = poly.buffer(0)
        if not poly.is_empty:
            polys.append(poly)
    if not polys:
        return np.empty((0, 2))
    union = unary_union(polys)
    if union.geom_type == "MultiPolygon":
        union = max(union.geoms, key=lambda g: g.area)
    return np.asarray(union.exterior.coords, dtype=np.float64)


def canonicalize(plan, plan_id=""):
    """RawFloorPlan -> FloorPlan in canonical form.

    Merges vertices within 1 mm, drops zero-length segments, joins
    overlapping collinear same-category segments (which also removes
    non-corner degree-2 vertices), and computes the building perimeter.
    """
    raw = list(plan.iter_segments())
    if not raw:
        return FloorPlan(
            segments=np.empty((0, 4)),
            categories=(),
            perimeter=_compute_perimeter(plan),
            plan_id=plan_id,
        )
    segments = np.array([s[:4] for s in raw], dtype=np.float64)
    cats = [s[4] for s in raw]

    segments = _merge_vertices(segments, MERGE_TOL)
    keep = seg_lengths(segments) > MERGE_TOL
    dropped = int((~keep).sum())
    merged = _join_collinear(
        [(tuple(seg), cat) for seg, cat in zip(segments[keep], np.array(cats)[keep])]
    )
    # canonical row order for determinism
    merged.sort(key=lambda sc: (sc[0], sc[1].value))
    out_segs = np.array([s for s, _ in merged], dtype=np.float64).reshape(-1, 4)
    out_cats = tuple(c for _, c in merged)
    return FloorPlan(
        segments=out_segs,
        categories=out_cats,
        perimeter=_compute_perimeter(plan),
        dropped=dropped,
        plan_id=plan_id,
    )


def classify_exterior_windows(plan):
    """Flag window segments whose both vertices lie near the perimeter."""
    if plan.perimeter.shape[0] < 2:
        return plan
    ring = plan.perimeter
    perim_segs = np.hstack([ring[:-1], ring[1:]])
    exterior = np.zeros(len(plan.categories), dtype=bool)
    for i, cat in enumerate(plan.categories):
        if cat is not SegmentCategory.WINDOW:
            continue
        ends = plan.segments[i].reshape(2, 2)
        exterior[i] = bool((min_distance_to_segments(ends, perim_segs) <= EXTERIOR_TOL).all())
    return replace(plan, exterior=exterior)


def load_plan(path, plan_id=None):
    """Parse, close doorways, canonicalize, and classify a plan file."""
    with open(path, "rb") as f:
        raw = parse_floorplan(f.read())
    if plan_id is None:
        import os

        plan_id = os.path.splitext(os.path.basename(str(path)))[0]
    plan = canonicalize(close_doorways(raw), plan_id=plan_id)
    return classify_exterior_windows(plan)


def plan_to_json(plan):
    """Serialize a canonical FloorPlan (not the room schema) for inspection."""
    return {
        "plan_id": plan.plan_id,
        "segments": plan.segments.tolist(),
        "categories": [c.value for c in plan.categories],
        "exterior": plan.exterior.astype(bool).tolist(),
        "perimeter": plan.perimeter.tolist(),
        "dropped": plan.dropped,
    }
