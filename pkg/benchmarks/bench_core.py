"""Compiled core versus numpy fallback for the pairwise assembly kernels.

Usage: python benchmarks/bench_core.py [--sizes 200 750 1500] [--repeat 5]
"""
import argparse
import time

import numpy as np

from metricgp import _backend, _fallback
from metricgp.field import build_field_model
from metricgp.graph import random_connected_graph, random_points
from metricgp.tree_kernels import h_tree

try:
    from metricgp import _core
except ImportError:
    _core = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[200, 750, 1500])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    impls = [("python", _fallback)] + ([("cython", _core)] if _core is not None else [])
    rng = np.random.default_rng(0)
    g = random_connected_graph(rng, 40)
    m = build_field_model(g, 3, 0.8, 0.3)
    tree = h_tree()
    Dv = tree.vertex_distances()
    print(f"{'kernel':<15}{'N':>6}" + "".join(f"{name:>12}" for name, _ in impls) + f"{'speedup':>10}")
    for N in args.sizes:
        la = g.locate(random_points(g, N, rng))
        lt = tree.locate(random_points(tree, N, rng))
        rows = {
            "pair_forms": lambda impl: _backend.pair_forms(la, la, m.St, m.Xt, impl=impl),
            "tree_distances": lambda impl: _backend.tree_distances(lt, lt, Dv, impl=impl),
        }
        for name, fn in rows.items():
            t = [best_of(lambda: fn(impl), args.repeat) for _, impl in impls]
            speed = f"{t[0] / t[-1]:>9.1f}x" if len(t) > 1 else f"{'-':>10}"
            print(f"{name:<15}{N:>6}" + "".join(f"{v * 1e3:>10.2f}ms" for v in t) + speed)


if __name__ == "__main__":
    main()
