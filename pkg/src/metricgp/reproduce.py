"""Worked examples as executable fixtures (CSV rows only, no plotting)."""
from __future__ import annotations

import numpy as np

from .field import build_field_model
from .graph import Point, path_graph, random_points
from .metric import distance_D
from .simulate import SampleSet, sample
from .tree_kernels import bivariate_askey_spec, h_tree, tree_kernel_cov

PATH_EXAMPLE_COLUMNS = ("case", "p", "alpha", "X13", "D11", "D12", "d")


def path_example_rows() -> list:
    """D11, D12 and d = D11 - D12 between the ends of the 3-vertex path.

    Cases: the maximiser 1.32092, the zero crossing 0.97222, a value inside the
    negative region, and alpha = 1/p with p = 10^4 (d tends to 2/9).
    """
    g = path_graph(3)
    u1, u3 = Point.at_vertex("v1"), Point.at_vertex("v3")
    cases = [("alpha-star", 3, 1.32092), ("alpha-hat", 3, 0.97222),
             ("alpha-0.5", 3, 0.5), ("alpha-1/p", 10_000, 1e-4)]
    rows = []
    for name, p, a in cases:
        m = build_field_model(g, p, a, beta=0.0)
        D = distance_D(m, u1, u3)
        i1, i3 = g.vertex_index("v1"), g.vertex_index("v3")
        rows.append({"case": name, "p": p, "alpha": a, "X13": float(m.X[i1, i3]),
                     "D11": D.diag, "D12": D.off, "d": D.diag - D.off})
    return rows


PROFILE_REFERENCE = "leaf1"
PROFILE_COLUMNS = ("point", "distance", "K11", "K22", "K12")


def kernel_profile_rows(step: float = 0.05) -> list:
    """Kernel entries against tree distance from the reference leaf.

    Sample points are equally spaced (at most ``step`` apart) along every edge.
    """
    g = h_tree()
    spec = bivariate_askey_spec().certified()
    pts = []
    for e in g.edges:
        k = max(1, int(np.ceil(e.length / step)))
        pts.extend(g.canonical(Point.on_edge(e.id, j / k)) for j in range(k + 1))
    uniq = list(dict.fromkeys(pts))
    ref = Point.at_vertex(PROFILE_REFERENCE)
    dist = g.tree_distance_matrix([ref], uniq)[0]
    K = tree_kernel_cov(spec, g, [ref], uniq)  # 2 x 2N
    order = np.lexsort((np.array([u.label() for u in uniq]), dist))
    rows = []
    for i in order:
        rows.append({"point": uniq[i].label(), "distance": float(dist[i]),
                     "K11": float(K[0, 2 * i]), "K22": float(K[1, 2 * i + 1]),
                     "K12": float(K[0, 2 * i + 1])})
    return rows


def askey_tree_sample(n_sites: int = 750, seed: int = 0, n_real: int = 1) -> SampleSet:
    """One realisation of the bivariate Askey field at uniformly placed sites."""
    g = h_tree()
    spec = bivariate_askey_spec().certified()
    pts = random_points(g, n_sites, np.random.default_rng(seed))
    return sample(spec, pts, n_real, seed, g=g)
