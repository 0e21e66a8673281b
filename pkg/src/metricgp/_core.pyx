# cython: language_level=3
"""Compiled pairwise kernels.

Same contracts as ``_fallback``; loops run without the GIL so row blocks can
be processed by a thread pool.
"""
from libc.math cimport fabs

ctypedef Py_ssize_t idx_t


cdef inline double dmin(double a, double b) nogil:
    return a if a < b else b


def pair_forms(const idx_t[::1] lo_a, const idx_t[::1] hi_a, const double[::1] d_a,
               const idx_t[::1] e_a, const double[::1] len_a,
               const idx_t[::1] lo_b, const idx_t[::1] hi_b, const double[::1] d_b,
               const idx_t[::1] e_b,
               const double[:, ::1] St, const double[:, ::1] Xt,
               double[:, ::1] s_out, double[:, ::1] x_out, double[:, ::1] B_out,
               idx_t start, idx_t stop):
    cdef idx_t i, j, a0, a1, b0, b1
    cdef idx_t M = lo_b.shape[0]
    cdef double wa0, wa1, wb0, wb1, da, db
    with nogil:
        for i in range(start, stop):
            a0 = lo_a[i]
            a1 = hi_a[i]
            da = d_a[i]
            wa0 = 1.0 - da
            wa1 = da
            for j in range(M):
                b0 = lo_b[j]
                b1 = hi_b[j]
                db = d_b[j]
                wb0 = 1.0 - db
                wb1 = db
                # same association order as the numpy fallback
                s_out[i, j] = (((wa0 * wb0 * St[a0, b0] + wa0 * wb1 * St[a0, b1])
                                + wa1 * wb0 * St[a1, b0]) + wa1 * wb1 * St[a1, b1])
                x_out[i, j] = (((wa0 * wb0 * Xt[a0, b0] + wa0 * wb1 * Xt[a0, b1])
                                + wa1 * wb0 * Xt[a1, b0]) + wa1 * wb1 * Xt[a1, b1])
                if e_a[i] >= 0 and e_a[i] == e_b[j]:
                    B_out[i, j] = len_a[i] * (dmin(da, db) - da * db)
                else:
                    B_out[i, j] = 0.0


def tree_distances(const idx_t[::1] lo_a, const idx_t[::1] hi_a, const double[::1] d_a,
                   const idx_t[::1] e_a, const double[::1] len_a,
                   const idx_t[::1] lo_b, const idx_t[::1] hi_b, const double[::1] d_b,
                   const idx_t[::1] e_b, const double[::1] len_b,
                   const double[:, ::1] Dv, double[:, ::1] out,
                   idx_t start, idx_t stop):
    cdef idx_t i, j, a0, a1, b0, b1
    cdef idx_t M = lo_b.shape[0]
    cdef double oa0, oa1, ob0, ob1, best, direct
    with nogil:
        for i in range(start, stop):
            a0 = lo_a[i]
            a1 = hi_a[i]
            oa0 = d_a[i] * len_a[i]
            oa1 = (1.0 - d_a[i]) * len_a[i]
            for j in range(M):
                b0 = lo_b[j]
                b1 = hi_b[j]
                ob0 = d_b[j] * len_b[j]
                ob1 = (1.0 - d_b[j]) * len_b[j]
                best = oa0 + Dv[a0, b0] + ob0
                best = dmin(best, oa0 + Dv[a0, b1] + ob1)
                best = dmin(best, oa1 + Dv[a1, b0] + ob0)
                best = dmin(best, oa1 + Dv[a1, b1] + ob1)
                if e_a[i] >= 0 and e_a[i] == e_b[j]:
                    direct = len_a[i] * fabs(d_a[i] - d_b[j])
                    best = dmin(direct, best)
                out[i, j] = best
