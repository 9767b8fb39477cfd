"""Information gain at frontier locations.

Unknown cells carry a uniform label distribution and known cells an
indicator, so the KL information gained by a refining scan reduces to the
count of unknown-turned-known cells (times log2 of the label count in
bits). Gains are estimated by simulating the sensor from the frontier
against naive / predicted / ground-truth occluder sets.
"""

from dataclasses import dataclass

import numpy as np

from .kernels import UNKNOWN, cast_rays, integrate_rays
from .mapops import cluster_frontiers, detect_frontier_cells

N_LABELS = 4
BITS_PER_CELL = float(np.log2(N_LABELS))


class RefinementError(ValueError):
    """A known cell changed label between the before and after grids."""


@dataclass(frozen=True)
class GainEstimate:
    frontier: object  # FrontierCluster
    gain_cells: int
    gain_bits: float
    estimator: str  # naive | predicted | truth


def information_gain(before, after):
    """(bits, cells) gained in `after` relative to `before`.

    Requires `after` to refine `before`: known cells must keep their label.
    """
    b = before.labels
    a = after.labels
    known = b != UNKNOWN
    if (a[known] != b[known]).any():
        raise RefinementError("a known cell changed label; after does not refine before")
    cells = int(((b == UNKNOWN) & (a != UNKNOWN)).sum())
    return cells * BITS_PER_CELL, cells


def scan_from_cell(grid, cell, occluders, max_range, n_rays=720):
    """Simulate a scan from a grid cell against occluders; Unknown cells
    only may change. Returns the number of unknown-turned-known cells."""
    origin = grid.cell_center_xy(*cell)
    angles = np.linspace(0.0, 2 * np.pi, n_rays, endpoint=False)
    dist, hit = cast_rays(origin[0], origin[1], angles, occluders, max_range)
    d = np.column_stack([np.cos(angles), np.sin(angles)])
    ends = origin + dist[:, None] * d
    labels = grid.labels.copy()
    unknown_before = int((labels == UNKNOWN).sum())
    integrate_rays(
        labels,
        grid.uv(origin)[0],
        grid.uv(ends),
        hit,
        np.zeros(n_rays, dtype=np.uint8),
        True,  # only Unknown cells may change
    )
    return unknown_before - int((labels == UNKNOWN).sum())


def gain_at_frontier(sample, frontier, occluders, max_range, estimator="naive",
                     n_rays=720):
    """Gain of a simulated scan from a frontier's location."""
    grid = sample.grid
    r, c = frontier.location
    from .kernels import FREE

    if grid.labels[r, c] != FREE:
        raise ValueError(f"frontier location {frontier.location} is not a Free cell")
    cells = scan_from_cell(grid, frontier.location, occluders, max_range, n_rays)
    return GainEstimate(
        frontier=frontier,
        gain_cells=cells,
        gain_bits=cells * BITS_PER_CELL,
        estimator=estimator,
    )


def eligible_frontiers(sample):
    """Frontier clusters of a sample's grid, evaluation-eligible only."""
    cells = detect_frontier_cells(sample.grid)
    return cluster_frontiers(cells, grid_shape=sample.grid.labels.shape)


def truth_occluders(sample, plan, window_termination="exterior"):
    """Plan occluders expressed in the sample's aligned robot frame."""
    from .geometry import rotate

    segs = plan.occluder_segments(window_termination)
    if segs.shape[0] == 0:
        return segs
    ang = -sample.grid.alignment
    return np.hstack(
        [
            rotate(segs[:, 0:2] - sample.pose, ang),
            rotate(segs[:, 2:4] - sample.pose, ang),
        ]
    )


def estimate_all(sample, predicted, truth_plan, max_range, n_rays=720,
                 window_termination="exterior"):
    """Naive, predicted, and truth gain per eligible frontier.

    naive: occluders are the visible segments only; predicted: visible plus
    the predicted segments; truth: the plan's occluders. All three share
    identical scan geometry.
    """
    visible = np.asarray(sample.visible_segments, dtype=np.float64).reshape(-1, 4)
    predicted = np.asarray(predicted, dtype=np.float64).reshape(-1, 4)
    sets = {
        "naive": visible,
        "predicted": np.vstack([visible, predicted]),
        "truth": truth_occluders(sample, truth_plan, window_termination),
    }
    out = []
    for frontier in eligible_frontiers(sample):
        for name, occluders in sets.items():
            out.append(
                gain_at_frontier(sample, frontier, occluders, max_range, name, n_rays)
            )
    return out
