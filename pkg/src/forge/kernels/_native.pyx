# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled ray casting and grid ray-marching kernels.

Must match the semantics of ``_fallback.py`` exactly; the test suite runs
both backends against each other.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, cos, fabs, floor, sin

cnp.import_array()

cdef signed char UNKNOWN = 0, FREE = 1, OCCUPIED = 2, WINDOW = 3

BACKEND = "native"


def cast_rays(double ox, double oy, angles, segments, double max_range):
    cdef double[::1] ang = np.ascontiguousarray(angles, dtype=np.float64)
    cdef double[:, ::1] segs = np.ascontiguousarray(
        np.asarray(segments, dtype=np.float64).reshape(-1, 4))
    cdef Py_ssize_t n_rays = ang.shape[0]
    cdef Py_ssize_t n_segs = segs.shape[0]
    dist_arr = np.full(n_rays, max_range)
    hit_arr = np.zeros(n_rays, dtype=np.uint8)
    cdef double[::1] dist = dist_arr
    cdef unsigned char[::1] hit = hit_arr
    cdef Py_ssize_t i, j
    cdef double dx, dy, px, py, ex, ey, denom, t, u, best
    for i in range(n_rays):
        dx = cos(ang[i])
        dy = sin(ang[i])
        best = INFINITY
        for j in range(n_segs):
            ex = segs[j, 2] - segs[j, 0]
            ey = segs[j, 3] - segs[j, 1]
            denom = dx * ey - dy * ex
            if fabs(denom) <= 1e-12:
                continue
            px = segs[j, 0] - ox
            py = segs[j, 1] - oy
            t = (px * ey - py * ex) / denom
            if t <= 1e-9 or t > max_range:
                continue
            u = (px * dy - py * dx) / denom
            if u < 0.0 or u > 1.0:
                continue
            if t < best:
                best = t
        if best != INFINITY:
            dist[i] = best
            hit[i] = 1
    return dist_arr, hit_arr


def integrate_rays(labels, origin_uv, ends_uv, hit, window, bint only_unknown=False):
    cdef signed char[:, ::1] lab = labels
    cdef double[:, ::1] ends = np.ascontiguousarray(ends_uv, dtype=np.float64)
    cdef unsigned char[::1] hits = np.ascontiguousarray(hit, dtype=np.uint8)
    cdef unsigned char[::1] win = np.ascontiguousarray(window, dtype=np.uint8)
    cdef Py_ssize_t h = lab.shape[0]
    cdef Py_ssize_t w = lab.shape[1]
    cdef double u0 = origin_uv[0]
    cdef double v0 = origin_uv[1]
    cdef Py_ssize_t i, k, n_cells
    cdef long r, c, r_end, c_end, step_r, step_c
    cdef double u1, v1, du, dv, t_max_c, t_max_r, t_delta_c, t_delta_r
    cdef bint terminal
    cdef signed char cur, new
    for i in range(ends.shape[0]):
        u1 = ends[i, 0]
        v1 = ends[i, 1]
        c = <long>floor(u0)
        r = <long>floor(v0)
        c_end = <long>floor(u1)
        r_end = <long>floor(v1)
        du = u1 - u0
        dv = v1 - v0
        step_c = 1 if du > 0 else -1
        step_r = 1 if dv > 0 else -1
        if du != 0:
            t_delta_c = fabs(1.0 / du)
            t_max_c = ((c + (1 if step_c > 0 else 0)) - u0) / du
        else:
            t_delta_c = INFINITY
            t_max_c = INFINITY
        if dv != 0:
            t_delta_r = fabs(1.0 / dv)
            t_max_r = ((r + (1 if step_r > 0 else 0)) - v0) / dv
        else:
            t_delta_r = INFINITY
            t_max_r = INFINITY
        n_cells = (r_end - r if r_end > r else r - r_end) + \
                  (c_end - c if c_end > c else c - c_end) + 1
        for k in range(n_cells):
            terminal = r == r_end and c == c_end
            if 0 <= r < h and 0 <= c < w:
                cur = lab[r, c]
                if terminal and hits[i]:
                    new = WINDOW if win[i] else OCCUPIED
                    if only_unknown:
                        if cur == UNKNOWN:
                            lab[r, c] = new
                    elif new > cur:
                        lab[r, c] = new
                elif cur == UNKNOWN:
                    lab[r, c] = FREE
            if terminal:
                break
            if t_max_c < t_max_r:
                c += step_c
                t_max_c += t_delta_c
            else:
                r += step_r
                t_max_r += t_delta_r
