"""Parity and correctness of the ray-casting / grid-integration kernels."""

import numpy as np
import pytest

import forge.kernels._fallback as fb
from forge.kernels import BACKEND, FREE, OCCUPIED, UNKNOWN, WINDOW, cast_rays

try:
    import forge.kernels._native as nat
except ImportError:
    nat = None

needs_native = pytest.mark.skipif(nat is None, reason="native kernel not built")


def random_scene(rng, n_segs=20, n_rays=64):
    segments = rng.uniform(-6, 6, size=(n_segs, 4))
    angles = rng.uniform(0, 2 * np.pi, size=n_rays)
    ox, oy = rng.uniform(-1, 1, size=2)
    return ox, oy, angles, segments


def test_cast_rays_axis_wall():
    # wall at x=2; the +x ray hits at 2, the +y ray runs to max range
    segs = np.array([[2.0, -1.0, 2.0, 1.0]])
    dist, hit = fb.cast_rays(0.0, 0.0, np.array([0.0, np.pi / 2]), segs, 4.5)
    assert np.allclose(dist, [2.0, 4.5])
    assert hit.tolist() == [1, 0]


def test_cast_rays_nearest_of_many():
    segs = np.array([[1.0, -1.0, 1.0, 1.0], [3.0, -1.0, 3.0, 1.0]])
    dist, hit = fb.cast_rays(0.0, 0.0, np.array([0.0]), segs, 10.0)
    assert dist[0] == pytest.approx(1.0)
    assert hit[0] == 1


def test_cast_rays_parallel_miss():
    segs = np.array([[0.0, 1.0, 5.0, 1.0]])
    dist, hit = fb.cast_rays(0.0, 0.0, np.array([0.0]), segs, 4.5)
    assert dist[0] == pytest.approx(4.5)
    assert hit[0] == 0


def test_cast_rays_range_clip():
    segs = np.array([[6.0, -1.0, 6.0, 1.0]])
    dist, hit = fb.cast_rays(0.0, 0.0, np.array([0.0]), segs, 4.5)
    assert dist[0] == pytest.approx(4.5)
    assert hit[0] == 0


def test_integrate_marks_free_and_occupied():
    labels = np.zeros((9, 9), dtype=np.int8)
    origin = np.array([4.5, 4.5])
    ends = np.array([[8.5, 4.5]])
    fb.integrate_rays(labels, origin, ends, np.array([1], np.uint8),
                      np.array([0], np.uint8), False)
    assert labels[4, 4] == FREE
    assert labels[4, 8] == OCCUPIED
    assert (labels[4, 5:8] == FREE).all()


def test_integrate_window_precedence():
    labels = np.zeros((5, 5), dtype=np.int8)
    origin = np.array([2.5, 2.5])
    ends = np.array([[4.5, 2.5]])
    fb.integrate_rays(labels, origin, ends, np.array([1], np.uint8),
                      np.array([1], np.uint8), False)
    assert labels[2, 4] == WINDOW
    # a later plain hit must not demote the window cell
    fb.integrate_rays(labels, origin, ends, np.array([1], np.uint8),
                      np.array([0], np.uint8), False)
    assert labels[2, 4] == WINDOW
    # nor may a pass-through ray demote occupied to free
    labels2 = labels.copy()
    fb.integrate_rays(labels2, origin, np.array([[4.5, 2.5]]),
                      np.array([0], np.uint8), np.array([0], np.uint8), False)
    assert labels2[2, 4] == WINDOW


def test_integrate_only_unknown_freezes_known():
    labels = np.zeros((5, 5), dtype=np.int8)
    labels[2, 3] = OCCUPIED
    origin = np.array([0.5, 2.5])
    ends = np.array([[4.5, 2.5]])
    fb.integrate_rays(labels, origin, ends, np.array([1], np.uint8),
                      np.array([0], np.uint8), True)
    assert labels[2, 3] == OCCUPIED  # unchanged, not re-labeled Free
    assert labels[2, 0] == FREE
    assert labels[2, 4] == OCCUPIED


def test_integration_order_invariance():
    rng = np.random.default_rng(7)
    origin = np.array([10.5, 10.5])
    ends = rng.uniform(0, 21, size=(40, 2))
    hit = rng.integers(0, 2, size=40).astype(np.uint8)
    window = (rng.random(40) < 0.3).astype(np.uint8) & hit
    a = np.zeros((21, 21), dtype=np.int8)
    fb.integrate_rays(a, origin, ends, hit, window, False)
    b = np.zeros((21, 21), dtype=np.int8)
    perm = rng.permutation(40)
    fb.integrate_rays(b, origin, ends[perm], hit[perm], window[perm], False)
    assert (a == b).all()


@needs_native
def test_native_backend_selected():
    assert BACKEND == "native"
    assert cast_rays is nat.cast_rays


@needs_native
@pytest.mark.parametrize("seed", range(8))
def test_cast_rays_parity(seed):
    rng = np.random.default_rng(seed)
    ox, oy, angles, segments = random_scene(rng)
    df, hf = fb.cast_rays(ox, oy, angles, segments, 4.5)
    dn, hn = nat.cast_rays(ox, oy, angles, segments, 4.5)
    assert np.allclose(df, dn, atol=1e-12)
    assert (hf == hn).all()


@needs_native
@pytest.mark.parametrize("seed", range(8))
def test_integrate_parity(seed):
    rng = np.random.default_rng(100 + seed)
    origin = rng.uniform(5, 26, size=2)
    ends = rng.uniform(-2, 33, size=(64, 2))
    hit = rng.integers(0, 2, size=64).astype(np.uint8)
    window = (rng.random(64) < 0.3).astype(np.uint8) & hit
    only_unknown = bool(seed % 2)
    base = rng.integers(0, 4, size=(31, 31)).astype(np.int8)
    a = base.copy()
    b = base.copy()
    fb.integrate_rays(a, origin, ends, hit, window, only_unknown)
    nat.integrate_rays(b, origin, ends, hit, window, only_unknown)
    assert (a == b).all()


def test_label_values():
    assert (UNKNOWN, FREE, OCCUPIED, WINDOW) == (0, 1, 2, 3)
