# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled raster kernels. Semantics must match ``_pykernels`` exactly."""

from libc.math cimport sqrt, fabs, floor, ceil


def pair_midpoint_violations(const long[:] px, const long[:] py, const unsigned char[:, :] ok):
    """Count pairs i < j whose midpoint cell (rounded half up) is not ``ok``.

    Returns (count, first_i, first_j) with -1 indices when there is none.
    """
    cdef Py_ssize_t n = px.shape[0], i, j
    cdef long cx, cy
    cdef long long count = 0
    cdef Py_ssize_t fi = -1, fj = -1
    for i in range(n):
        for j in range(i + 1, n):
            cx = (px[i] + px[j] + 1) // 2
            cy = (py[i] + py[j] + 1) // 2
            if not ok[cx, cy]:
                if count == 0:
                    fi = i
                    fj = j
                count += 1
    return count, fi, fj


def min_pair_midpoint_depth(const long[:] px, const long[:] py, const double[:, :] depth,
                            double eps, double tol):
    """Smallest midpoint depth over pairs whose distance is within tol of eps.

    The depth at a half-integer midpoint is the minimum over the (up to four)
    cells it touches. Returns (min_depth, count, best_i, best_j).
    """
    cdef Py_ssize_t n = px.shape[0], i, j
    cdef double dx, dy, d, mx, my, v, best = 1e300
    cdef double lo = eps - tol, hi = eps + tol
    cdef double lo2 = lo * lo if lo > 0 else 0.0
    cdef double hi2 = hi * hi
    cdef long x0, x1, y0, y1
    cdef long long count = 0
    cdef Py_ssize_t bi = -1, bj = -1
    for i in range(n):
        for j in range(i + 1, n):
            dx = <double>(px[j] - px[i])
            dy = <double>(py[j] - py[i])
            d = dx * dx + dy * dy
            if d < lo2 or d > hi2:
                continue
            count += 1
            mx = 0.5 * <double>(px[i] + px[j])
            my = 0.5 * <double>(py[i] + py[j])
            x0 = <long>floor(mx)
            x1 = <long>ceil(mx)
            y0 = <long>floor(my)
            y1 = <long>ceil(my)
            v = depth[x0, y0]
            if depth[x1, y0] < v:
                v = depth[x1, y0]
            if depth[x0, y1] < v:
                v = depth[x0, y1]
            if depth[x1, y1] < v:
                v = depth[x1, y1]
            if v < best:
                best = v
                bi = i
                bj = j
    return best, count, bi, bj
