"""Statistical evaluation of gain estimators.

Median absolute error with percentile-bootstrap confidence intervals,
exact two-sample Kolmogorov-Smirnov statistics, over/under-estimation
frequencies, the outside-perimeter length metric, and CDF export.
"""

from dataclasses import dataclass

import numpy as np
from shapely.geometry import LineString, Polygon

BOOTSTRAP_TRIALS = 1000
CI_LEVEL = 95.0


@dataclass(frozen=True)
class ErrorSample:
    frontier_id: str
    estimator: str
    d: float  # signed error, estimate - truth, in cells

    @property
    def abs_d(self):
        return abs(self.d)


@dataclass(frozen=True)
class EstimatorSummary:
    estimator: str
    n: int
    mae: float  # median absolute error, cells
    ci_low: float
    ci_high: float
    under_freq: float
    over_freq: float
    tie_freq: float


def lower_median(values):
    """Median with the lower-median convention for even-length input."""
    s = np.sort(np.asarray(values, dtype=np.float64))
    if s.size == 0:
        raise ValueError("empty sample")
    return float(s[(s.size - 1) // 2])


def bootstrap_ci(values, trials, seed, level=CI_LEVEL):
    """Percentile bootstrap interval for the (lower) median."""
    values = np.asarray(values, dtype=np.float64)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, values.size, size=(trials, values.size))
    resampled = np.sort(values[idx], axis=1)
    medians = resampled[:, (values.size - 1) // 2]
    lo, hi = np.percentile(medians, [(100 - level) / 2, 100 - (100 - level) / 2])
    return float(lo), float(hi)


def summarize(errors, trials=BOOTSTRAP_TRIALS, seed=0):
    """Per-estimator MAE, bootstrap CI, and over/under/tie frequencies."""
    groups = {}
    for e in errors:
        groups.setdefault(e.estimator, []).append(e.d)
    out = []
    for estimator in sorted(groups):
        d = np.asarray(groups[estimator], dtype=np.float64)
        abs_d = np.abs(d)
        lo, hi = bootstrap_ci(abs_d, trials, seed)
        out.append(
            EstimatorSummary(
                estimator=estimator,
                n=int(d.size),
                mae=lower_median(abs_d),
                ci_low=lo,
                ci_high=hi,
                under_freq=float((d < 0).mean()),
                over_freq=float((d > 0).mean()),
                tie_freq=float((d == 0).mean()),
            )
        )
    return out


def ks_two_sample(a, b):
    """Exact sup |F_a - F_b| from the merged order statistics."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.abs(fa - fb).max())


def empirical_cdf(values, bins=None):
    """(x, F(x)) pairs; bins default to the sorted unique values."""
    values = np.asarray(values, dtype=np.float64)
    if bins is None:
        xs = np.unique(values)
    else:
        xs = np.asarray(bins, dtype=np.float64)
    f = np.searchsorted(np.sort(values), xs, side="right") / values.size
    return np.column_stack([xs, f])


def export_cdf(errors, bins=None):
    """Per-estimator CDF tables of |d|, as {estimator: (x, F) array}."""
    groups = {}
    for e in errors:
        groups.setdefault(e.estimator, []).append(abs(e.d))
    return {est: empirical_cdf(vals, bins) for est, vals in sorted(groups.items())}


def outside_perimeter_fraction(segments, perimeter):
    """Fraction of total predicted segment length outside the perimeter."""
    perimeter = np.asarray(perimeter, dtype=np.float64)
    if perimeter.shape[0] < 4 or not np.allclose(perimeter[0], perimeter[-1]):
        raise ValueError("perimeter must be a closed polyline")
    poly = Polygon(perimeter)
    if not poly.is_valid:
        poly = poly.buffer(0)
    segments = np.asarray(segments, dtype=np.float64).reshape(-1, 4)
    total = 0.0
    inside = 0.0
    for x0, y0, x1, y1 in segments:
        line = LineString([(x0, y0), (x1, y1)])
        total += line.length
        inside += line.intersection(poly).length
    if total == 0.0:
        return 0.0
    return float((total - inside) / total)
