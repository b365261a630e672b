# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled dense assembly of the single-layer and double-layer matrices.

Same formulas as ``_kernels_py``; rows are independent, so the outer loop runs
in parallel without shared writes and the result does not depend on the
thread count.
"""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport sqrt, log, atan2, fabs

cnp.import_array()

cdef double INV_4PI = 0.07957747154594767
cdef double EDGE_TOL = 1e-14


cdef inline double _dot(const double* a, const double* b) noexcept nogil:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


cdef inline double _norm(const double* a) noexcept nogil:
    return sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


cdef inline void _cross(const double* a, const double* b, double* out) noexcept nogil:
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]


cdef inline double _solid_angle(double* rel) noexcept nogil:
    cdef double c[3]
    cdef double d0 = _norm(rel)
    cdef double d1 = _norm(rel + 3)
    cdef double d2 = _norm(rel + 6)
    _cross(rel + 3, rel + 6, c)
    cdef double num = _dot(rel, c)
    cdef double den = (d0 * d1 * d2 + _dot(rel, rel + 3) * d2
                       + _dot(rel, rel + 6) * d1 + _dot(rel + 3, rel + 6) * d0)
    return 2.0 * atan2(num, den)


cdef inline double _single_layer(double* rel, const double* nrm, double omega) noexcept nogil:
    cdef double d = -_dot(nrm, rel)
    cdef double total = d * omega
    cdef double e[3]
    cdef double s[3]
    cdef double m[3]
    cdef double l, p, sm, sp, rm, rp, r0sq, num, den
    cdef int i, k
    cdef double* a
    cdef double* b
    for i in range(3):
        a = rel + 3 * i
        b = rel + 3 * ((i + 1) % 3)
        for k in range(3):
            e[k] = b[k] - a[k]
        l = _norm(e)
        for k in range(3):
            s[k] = e[k] / l
        _cross(s, nrm, m)
        p = _dot(a, m)
        # p*log(...) -> 0 as the point approaches the edge line
        if fabs(p) <= EDGE_TOL * l:
            continue
        sm = _dot(a, s)
        sp = _dot(b, s)
        rm = _norm(a)
        rp = _norm(b)
        r0sq = p * p + d * d
        if sp >= 0:
            num = rp + sp
        else:
            num = r0sq / (rp - sp)
        if sm >= 0:
            den = rm + sm
        else:
            den = r0sq / (rm - sm)
        total += p * log(num / den)
    return total * INV_4PI


cdef void _row(Py_ssize_t row, const double[:, :, ::1] corners, const double[:, ::1] centroids,
               const double[:, ::1] normals, const double[::1] areas, const double[::1] max_edges,
               double near_ratio, const double[:, ::1] quad_bary, const double[::1] quad_weights,
               double[:, ::1] L, double[:, ::1] M) noexcept nogil:
    cdef Py_ssize_t n = areas.shape[0]
    cdef Py_ssize_t nq = quad_weights.shape[0]
    cdef Py_ssize_t col, k, q
    cdef double rel[9]
    cdef double nrm[3]
    cdef double ox = centroids[row, 0]
    cdef double oy = centroids[row, 1]
    cdef double oz = centroids[row, 2]
    cdef double am = areas[row]
    cdef double dx, dy, dz, dist, omega, acc, px, py, pz
    for col in range(n):
        for k in range(3):
            rel[3 * k] = corners[col, k, 0] - ox
            rel[3 * k + 1] = corners[col, k, 1] - oy
            rel[3 * k + 2] = corners[col, k, 2] - oz
        omega = _solid_angle(rel)
        if col == row:
            M[row, col] = 0.0
        else:
            M[row, col] = am * omega * INV_4PI
        dx = centroids[col, 0] - ox
        dy = centroids[col, 1] - oy
        dz = centroids[col, 2] - oz
        dist = sqrt(dx * dx + dy * dy + dz * dz)
        if dist < near_ratio * max_edges[col]:
            nrm[0] = normals[col, 0]
            nrm[1] = normals[col, 1]
            nrm[2] = normals[col, 2]
            L[row, col] = am * _single_layer(rel, nrm, omega)
        else:
            acc = 0.0
            for q in range(nq):
                px = (quad_bary[q, 0] * corners[col, 0, 0] + quad_bary[q, 1] * corners[col, 1, 0]
                      + quad_bary[q, 2] * corners[col, 2, 0]) - ox
                py = (quad_bary[q, 0] * corners[col, 0, 1] + quad_bary[q, 1] * corners[col, 1, 1]
                      + quad_bary[q, 2] * corners[col, 2, 1]) - oy
                pz = (quad_bary[q, 0] * corners[col, 0, 2] + quad_bary[q, 1] * corners[col, 1, 2]
                      + quad_bary[q, 2] * corners[col, 2, 2]) - oz
                acc += quad_weights[q] / sqrt(px * px + py * py + pz * pz)
            L[row, col] = am * areas[col] * acc * INV_4PI


def assemble(const double[:, :, ::1] corners, const double[:, ::1] centroids, const double[:, ::1] normals,
             const double[::1] areas, const double[::1] max_edges, double near_ratio,
             const double[:, ::1] quad_bary, const double[::1] quad_weights, int num_threads=1):
    """Return (L, M); see ``_kernels_py.assemble`` for the definitions."""
    cdef Py_ssize_t n = areas.shape[0]
    L_arr = np.empty((n, n), dtype=np.float64)
    M_arr = np.empty((n, n), dtype=np.float64)
    cdef double[:, ::1] L = L_arr
    cdef double[:, ::1] M = M_arr
    cdef Py_ssize_t row
    if num_threads < 1:
        num_threads = 1
    for row in prange(n, nogil=True, schedule="static", num_threads=num_threads):
        _row(row, corners, centroids, normals, areas, max_edges, near_ratio,
             quad_bary, quad_weights, L, M)
    return L_arr, M_arr
