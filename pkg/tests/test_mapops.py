import numpy as np
import pytest

from forge.kernels import FREE, OCCUPIED, UNKNOWN, WINDOW
from forge.mapops import (
    FrontierCluster,
    _dbscan,
    cluster_frontiers,
    detect_frontier_cells,
    kmeans_split,
    merge_collinear_runs,
    recover_visible_segments,
)
from forge.sensor import OccupancyGrid


def grid_from(labels, area=None):
    labels = np.asarray(labels, dtype=np.int8)
    if area is None:
        area = float(labels.shape[0])  # 1 m cells
    return OccupancyGrid(labels=labels, area=area, center=np.zeros(2))


def test_marching_squares_occupied_row():
    # Occupied row flanked by Free rows -> two horizontal contour lines
    labels = np.full((3, 5), FREE, dtype=np.int8)
    labels[1, :] = OCCUPIED
    segs = recover_visible_segments(grid_from(labels))
    assert segs.shape == (2, 4)
    ys = np.sort(np.round(segs[:, 1], 6))
    assert (segs[:, 1] == segs[:, 3]).all()  # horizontal
    assert ys[1] - ys[0] == pytest.approx(1.0)  # one cell apart
    lens = np.abs(segs[:, 2] - segs[:, 0])
    assert np.allclose(lens, 4.0)  # spans the 4 inter-center columns


def test_marching_squares_unknown_masks():
    labels = np.full((3, 5), FREE, dtype=np.int8)
    labels[1, :] = OCCUPIED
    labels[0, :] = UNKNOWN
    segs = recover_visible_segments(grid_from(labels))
    assert segs.shape == (1, 4)  # only the lower contour remains


def test_marching_squares_window_counts_as_solid():
    labels = np.full((3, 5), FREE, dtype=np.int8)
    labels[1, :] = WINDOW
    assert recover_visible_segments(grid_from(labels)).shape == (2, 4)


def test_marching_squares_single_cell_diamond():
    labels = np.full((3, 3), FREE, dtype=np.int8)
    labels[1, 1] = OCCUPIED
    segs = recover_visible_segments(grid_from(labels))
    assert segs.shape == (4, 4)  # a diamond of four diagonal edges
    lens = np.hypot(segs[:, 2] - segs[:, 0], segs[:, 3] - segs[:, 1])
    assert np.allclose(lens, np.sqrt(0.5))


def test_marching_squares_saddle_fences_free_corners():
    # occupied diagonal: the free anti-diagonal corners must be cut off
    labels = np.full((2, 2), FREE, dtype=np.int8)
    labels[0, 0] = OCCUPIED
    labels[1, 1] = OCCUPIED
    segs = recover_visible_segments(grid_from(labels))
    assert segs.shape == (2, 4)


def test_marching_squares_uniform_emits_nothing():
    for val in (FREE, OCCUPIED, UNKNOWN):
        labels = np.full((4, 4), val, dtype=np.int8)
        assert recover_visible_segments(grid_from(labels)).shape == (0, 4)


def test_merge_collinear_runs():
    segs = np.array(
        [
            [0.0, 0.0, 1.0, 0.0],
            [1.0, 0.0, 2.0, 0.0],
            [3.0, 0.0, 4.0, 0.0],  # gap: stays separate
            [0.0, 1.0, 1.0, 1.0],  # different line
        ]
    )
    out = merge_collinear_runs(segs)
    assert out.shape == (3, 4)
    lens = np.abs(out[:, 2] - out[:, 0])
    assert sorted(np.round(lens, 6)) == [1.0, 1.0, 2.0]


def test_frontier_rule_fixture():
    # center Free, left Free, right Unknown, rest Occupied -> only the center
    labels = np.array(
        [
            [OCCUPIED, OCCUPIED, OCCUPIED],
            [FREE, FREE, UNKNOWN],
            [OCCUPIED, OCCUPIED, OCCUPIED],
        ],
        dtype=np.int8,
    )
    assert detect_frontier_cells(grid_from(labels)) == {(1, 1)}


def test_frontier_needs_free_neighbor():
    # free cell beside unknown but with no free neighbor is not a frontier
    labels = np.array(
        [
            [OCCUPIED, OCCUPIED, OCCUPIED],
            [OCCUPIED, FREE, UNKNOWN],
            [OCCUPIED, OCCUPIED, OCCUPIED],
        ],
        dtype=np.int8,
    )
    assert detect_frontier_cells(grid_from(labels)) == set()


def test_frontier_diagonal_neighbors_ignored():
    labels = np.array(
        [
            [UNKNOWN, OCCUPIED, OCCUPIED],
            [OCCUPIED, FREE, FREE],
            [OCCUPIED, OCCUPIED, OCCUPIED],
        ],
        dtype=np.int8,
    )
    # unknown is only diagonal to the free pair -> no frontier
    assert detect_frontier_cells(grid_from(labels)) == set()


def test_dbscan_two_blobs():
    blob_a = [(0, 0), (0, 1), (1, 0), (1, 1)]
    blob_b = [(10, 10), (10, 11), (11, 10)]
    clusters = _dbscan(blob_a + blob_b, eps=1.5, min_pts=3)
    assert sorted(len(c) for c in clusters) == [3, 4]


def test_dbscan_deterministic():
    pts = [(0, 0), (0, 1), (1, 0), (1, 1), (5, 5), (5, 6), (6, 5)]
    a = _dbscan(pts, 1.5, 3)
    b = _dbscan(list(reversed(pts)), 1.5, 3)
    assert [sorted(c) for c in a] == [sorted(c) for c in b]


def test_cluster_min_size_filter():
    cells = {(3, 3), (3, 4)}  # size 2 < 3
    assert cluster_frontiers(cells, grid_shape=(20, 20)) == []


def test_cluster_line_location_is_middle():
    # a straight 11-cell frontier line: location at the middle cell
    cells = {(10, c) for c in range(20, 31)}
    clusters = cluster_frontiers(cells, grid_shape=(40, 40))
    assert len(clusters) == 1
    assert clusters[0].location == (10, 25)
    assert clusters[0].size == 11


def test_cluster_split_90_cells():
    # a 90-cell arc splits into ceil(90/30) = 3 subclusters tiling the set
    cells = set()
    for i in range(90):
        ang = np.pi * i / 180.0
        cells.add((int(40 + 25 * np.sin(ang)), int(40 + 25 * np.cos(ang))))
    # dedupe may drop a few; top up along a line to exactly 90
    extra = 0
    while len(cells) < 90:
        cells.add((10, 10 + extra))
        extra += 1
    clusters = cluster_frontiers(cells, eps=3.0, min_pts=3, grid_shape=(80, 80))
    # exact tiling: every input cell appears exactly once across subclusters
    from collections import Counter

    counts = Counter(cell for c in clusters for cell in c.cells)
    assert all(v == 1 for v in counts.values())


def test_cluster_split_exact_tiling_line():
    cells = {(20, c) for c in range(5, 95)}  # 90 cells in a row
    clusters = cluster_frontiers(cells, grid_shape=(120, 120))
    assert len(clusters) == 3
    assert sorted(cell for c in clusters for cell in c.cells) == sorted(cells)
    assert all(c.size <= 45 for c in clusters)


def test_cluster_edge_margin():
    cells = {(2, c) for c in range(10, 20)}  # location row 2 < 5 from edge
    assert cluster_frontiers(cells, grid_shape=(121, 121)) == []
    # without a grid shape the filter is off
    assert len(cluster_frontiers(cells)) == 1


def test_kmeans_split_deterministic_partition():
    cells = [(0, c) for c in range(40)]
    a = kmeans_split(cells, 2)
    b = kmeans_split(list(reversed(cells)), 2)
    assert [sorted(p) for p in a] == [sorted(p) for p in b]
    assert sorted(c for p in a for c in p) == sorted(cells)


def test_frontier_cluster_dataclass():
    cl = FrontierCluster(cells=((1, 2), (1, 3), (1, 4)), location=(1, 3))
    assert cl.size == 3
