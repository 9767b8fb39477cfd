"""Benchmark the compiled kernels against the numpy fallback.

Times cast_rays and integrate_rays on a synthetic scene for both backends
and prints per-call timings plus the speedup. Run:

    python3 benchmarks/bench_kernels.py [--rays 720] [--segments 200] [--repeat 200]
"""

import argparse
import time

import numpy as np

from forge.kernels import _fallback

try:
    from forge.kernels import _native
except ImportError:
    _native = None


def make_scene(n_segments, seed=0):
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-7.0, 7.0, size=(n_segments, 2))
    offsets = rng.uniform(-1.5, 1.5, size=(n_segments, 2))
    return np.hstack([centers - offsets, centers + offsets])


def bench(fn, repeat):
    fn()  # warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - t0) / repeat


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rays", type=int, default=720)
    ap.add_argument("--segments", type=int, default=200)
    ap.add_argument("--grid", type=int, default=121)
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()

    segments = make_scene(args.segments)
    angles = np.linspace(0.0, 2 * np.pi, args.rays, endpoint=False)
    backends = [("fallback", _fallback)]
    if _native is not None:
        backends.append(("native", _native))
    else:
        print("compiled extension not built; benchmarking fallback only")

    print(f"cast_rays: {args.rays} rays x {args.segments} segments")
    cast_times = {}
    for name, impl in backends:
        dt = bench(lambda: impl.cast_rays(0.0, 0.0, angles, segments, 7.5), args.repeat)
        cast_times[name] = dt
        print(f"  {name:8s} {dt * 1e6:9.1f} us/call")
    if len(cast_times) == 2:
        print(f"  speedup  {cast_times['fallback'] / cast_times['native']:.1f}x")

    dist, hit = _fallback.cast_rays(0.0, 0.0, angles, segments, 7.5)
    d = np.column_stack([np.cos(angles), np.sin(angles)])
    scale = args.grid / 15.0
    origin_uv = np.array([args.grid / 2.0, args.grid / 2.0])
    ends = dist[:, None] * d
    ends_uv = np.column_stack(
        [args.grid / 2.0 + scale * ends[:, 0], args.grid / 2.0 - scale * ends[:, 1]]
    )
    window = np.zeros(args.rays, dtype=np.uint8)

    print(f"integrate_rays: {args.rays} rays into a {args.grid}x{args.grid} grid")
    int_times = {}
    for name, impl in backends:
        labels = np.zeros((args.grid, args.grid), dtype=np.int8)
        dt = bench(
            lambda: impl.integrate_rays(labels, origin_uv, ends_uv, hit, window, False),
            args.repeat,
        )
        int_times[name] = dt
        print(f"  {name:8s} {dt * 1e6:9.1f} us/call")
    if len(int_times) == 2:
        print(f"  speedup  {int_times['fallback'] / int_times['native']:.1f}x")


if __name__ == "__main__":
    main()
