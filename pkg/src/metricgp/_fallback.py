"""Pure numpy versions of the pairwise kernels in ``_core.pyx``.

Both implementations evaluate every output entry with the same fixed
sequence of floating point operations, so results do not depend on how rows
are split across threads.
"""
import numpy as np


def pair_forms(lo_a, hi_a, d_a, e_a, len_a, lo_b, hi_b, d_b, e_b, St, Xt,
               s_out, x_out, B_out, start, stop):
    """Fill rows ``start:stop`` of the interpolated bilinear forms.

    s[i, j] = delta_i^T St delta_j, x[i, j] = delta_i^T Xt delta_j and
    B[i, j] = 1(same edge) * len * (min(d_i, d_j) - d_i d_j).
    """
    sl = slice(start, stop)
    wa = (1.0 - d_a[sl])[:, None], d_a[sl][:, None]
    wb = (1.0 - d_b)[None, :], d_b[None, :]
    ia = lo_a[sl][:, None], hi_a[sl][:, None]
    ib = lo_b[None, :], hi_b[None, :]
    for M, out in ((St, s_out), (Xt, x_out)):
        acc = wa[0] * wb[0] * M[ia[0], ib[0]]
        acc = acc + wa[0] * wb[1] * M[ia[0], ib[1]]
        acc = acc + wa[1] * wb[0] * M[ia[1], ib[0]]
        acc = acc + wa[1] * wb[1] * M[ia[1], ib[1]]
        out[sl] = acc
    da = d_a[sl][:, None]
    db = d_b[None, :]
    same = (e_a[sl][:, None] == e_b[None, :]) & (e_a[sl][:, None] >= 0)
    B_out[sl] = np.where(same, len_a[sl][:, None] * (np.minimum(da, db) - da * db), 0.0)


def tree_distances(lo_a, hi_a, d_a, e_a, len_a, lo_b, hi_b, d_b, e_b, len_b, Dv,
                   out, start, stop):
    """Fill rows ``start:stop`` of the tree geodesic distance matrix."""
    sl = slice(start, stop)
    oa = (d_a[sl] * len_a[sl])[:, None], ((1.0 - d_a[sl]) * len_a[sl])[:, None]
    ob = (d_b * len_b)[None, :], ((1.0 - d_b) * len_b)[None, :]
    ia = lo_a[sl][:, None], hi_a[sl][:, None]
    ib = lo_b[None, :], hi_b[None, :]
    best = oa[0] + Dv[ia[0], ib[0]] + ob[0]
    best = np.minimum(best, oa[0] + Dv[ia[0], ib[1]] + ob[1])
    best = np.minimum(best, oa[1] + Dv[ia[1], ib[0]] + ob[0])
    best = np.minimum(best, oa[1] + Dv[ia[1], ib[1]] + ob[1])
    same = (e_a[sl][:, None] == e_b[None, :]) & (e_a[sl][:, None] >= 0)
    direct = len_a[sl][:, None] * np.abs(d_a[sl][:, None] - d_b[None, :])
    out[sl] = np.where(same, np.minimum(direct, best), best)
