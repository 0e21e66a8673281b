"""Selects the compiled core when available, otherwise the numpy fallback.

Set ``METRICGP_BACKEND=python`` to force the fallback.  ``METRICGP_THREADS``
caps the number of worker threads used for row-block assembly (default 1).
Every output entry is computed independently of the row split, so results
are bitwise identical for any thread count.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _fallback

try:
    if os.environ.get("METRICGP_BACKEND", "").lower() == "python":
        raise ImportError("fallback forced")
    from . import _core as _impl
    NAME = "cython"
except ImportError:
    _impl = _fallback
    NAME = "python"

_MIN_ROWS_PER_TASK = 64


def thread_count() -> int:
    raw = os.environ.get("METRICGP_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _row_blocks(N: int, threads: int):
    nblk = max(1, min(threads, N // _MIN_ROWS_PER_TASK))
    edges = np.linspace(0, N, nblk + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _run(fn, N, impl=None):
    threads = thread_count()
    blocks = _row_blocks(N, threads)
    if len(blocks) <= 1:
        for a, b in blocks:
            fn(a, b)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(lambda ab: fn(*ab), blocks))


def _arrays(loc):
    return (np.ascontiguousarray(loc.lo, dtype=np.intp),
            np.ascontiguousarray(loc.hi, dtype=np.intp),
            np.ascontiguousarray(loc.delta, dtype=float),
            np.ascontiguousarray(loc.eidx, dtype=np.intp),
            np.ascontiguousarray(loc.length, dtype=float))


def pair_forms(la, lb, St, Xt, impl=None):
    """Interpolated forms ``(s, x, B)`` between two located point sets."""
    impl = impl or _impl
    A = _arrays(la)
    Bv = _arrays(lb)
    N, M = len(A[0]), len(Bv[0])
    St = np.ascontiguousarray(St, dtype=float)
    Xt = np.ascontiguousarray(Xt, dtype=float)
    s = np.empty((N, M))
    x = np.empty((N, M))
    B = np.empty((N, M))
    _run(lambda a, b: impl.pair_forms(*A, *Bv[:4], St, Xt, s, x, B, a, b), N)
    return s, x, B


def tree_distances(la, lb, Dv, impl=None):
    impl = impl or _impl
    A = _arrays(la)
    Bv = _arrays(lb)
    N, M = len(A[0]), len(Bv[0])
    Dv = np.ascontiguousarray(Dv, dtype=float)
    out = np.empty((N, M))
    _run(lambda a, b: impl.tree_distances(*A, *Bv, Dv, out, a, b), N)
    return out
