"""Graphs with Euclidean edges.

A graph is a finite, simple, connected, undirected graph whose edges carry a
positive length.  Every edge is identified with the interval [0, length], so a
point of the graph is either a vertex or a pair (edge, delta) where
``delta`` in [0, 1] is the relative position measured from the edge's lower
endpoint (vertex ids are sorted lexicographically and each edge is stored with
``v_from < v_to``).

The vertex order fixes the row/column order of every matrix downstream.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from . import _backend


class GraphError(ValueError):
    """Invalid graph or point.  ``code`` names the failing rule."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass(frozen=True)
class Edge:
    id: str
    v_from: str
    v_to: str
    length: float

    @property
    def weight(self) -> float:
        return 1.0 / self.length


@dataclass(frozen=True)
class Point:
    """A location on a graph: a vertex, or an interior point of an edge.

    Build with :meth:`at_vertex` or :meth:`on_edge`.  Points with ``delta`` in
    {0, 1} are turned into the matching vertex by :meth:`GraphEE.canonical`.
    """

    vertex: str | None = None
    edge: str | None = None
    delta: float = 0.0

    @classmethod
    def at_vertex(cls, vid: str) -> "Point":
        return cls(vertex=str(vid))

    @classmethod
    def on_edge(cls, eid: str, delta: float) -> "Point":
        delta = float(delta)
        if not 0.0 <= delta <= 1.0:
            raise GraphError("bad-delta", f"delta={delta} outside [0, 1]")
        return cls(edge=str(eid), delta=delta)

    @classmethod
    def from_json(cls, obj: dict) -> "Point":
        if "vertex" in obj:
            return cls.at_vertex(obj["vertex"])
        if "edge" in obj:
            return cls.on_edge(obj["edge"], obj.get("delta", 0.0))
        raise GraphError("bad-point", f"point needs 'vertex' or 'edge': {obj!r}")

    def to_json(self) -> dict:
        if self.vertex is not None:
            return {"vertex": self.vertex}
        return {"edge": self.edge, "delta": self.delta}

    def label(self) -> str:
        if self.vertex is not None:
            return self.vertex
        return f"{self.edge}@{self.delta:.17g}"


@dataclass(frozen=True)
class Located:
    """Array form of a batch of points, used by the numeric kernels.

    ``lo``/``hi`` are vertex indices of the carrying edge (equal for vertices),
    ``delta`` the relative position from ``lo``, ``eidx`` the edge index or -1
    for vertices and ``length`` the edge length (0 for vertices).
    """

    lo: np.ndarray
    hi: np.ndarray
    delta: np.ndarray
    eidx: np.ndarray
    length: np.ndarray

    def __len__(self):
        return len(self.lo)

    def delta_matrix(self, n: int) -> np.ndarray:
        """Dense N x n matrix whose rows are the interpolation vectors."""
        N = len(self.lo)
        out = np.zeros((N, n))
        rows = np.arange(N)
        np.add.at(out, (rows, self.lo), 1.0 - self.delta)
        np.add.at(out, (rows, self.hi), self.delta)
        return out


class GraphEE:
    """Immutable graph with Euclidean edges.

    Parameters
    ----------
    vertices : iterable of str
    edges : iterable of Edge
        Validated on construction; see :func:`parse_graph` for the rules.
    """

    def __init__(self, vertices: Iterable[str], edges: Iterable[Edge]):
        verts = [str(v) for v in vertices]
        if len(set(verts)) != len(verts):
            raise GraphError("duplicate-vertex", "vertex ids must be unique")
        if not verts:
            raise GraphError("empty", "graph has no vertices")
        self._vertices = tuple(sorted(verts))
        self._vindex = {v: i for i, v in enumerate(self._vertices)}

        seen_pairs = {}
        seen_ids = set()
        norm = []
        for e in edges:
            for v in (e.v_from, e.v_to):
                if v not in self._vindex:
                    raise GraphError("unknown-vertex", f"edge {e.id} references {v!r}")
            if e.v_from == e.v_to:
                raise GraphError("self-loop", f"edge {e.id} joins {e.v_from} to itself")
            if not (np.isfinite(e.length) and e.length > 0):
                raise GraphError("non-positive-length", f"edge {e.id} has length {e.length}")
            if e.id in seen_ids:
                raise GraphError("duplicate-edge-id", f"edge id {e.id} used twice")
            a, b = sorted((e.v_from, e.v_to))
            if (a, b) in seen_pairs:
                raise GraphError(
                    "duplicate-edge",
                    f"edges {seen_pairs[(a, b)]} and {e.id} both join {a} and {b}")
            seen_pairs[(a, b)] = e.id
            seen_ids.add(e.id)
            norm.append(Edge(str(e.id), a, b, float(e.length)))
        self._edges = tuple(norm)
        self._eindex = {e.id: k for k, e in enumerate(self._edges)}

        n = len(self._vertices)
        if n > 1:
            adj = self._adjacency(np.ones(len(self._edges)))
            ncomp, _ = connected_components(adj, directed=False)
            if ncomp != 1:
                raise GraphError("disconnected", f"graph has {ncomp} components")
        self._vdist = None

    # -- basic accessors -------------------------------------------------
    @property
    def vertices(self) -> tuple:
        return self._vertices

    @property
    def edges(self) -> tuple:
        return self._edges

    @property
    def n(self) -> int:
        return len(self._vertices)

    def vertex_index(self, vid: str) -> int:
        try:
            return self._vindex[vid]
        except KeyError:
            raise GraphError("unknown-vertex", f"no vertex {vid!r}") from None

    def edge(self, eid: str) -> Edge:
        try:
            return self._edges[self._eindex[eid]]
        except KeyError:
            raise GraphError("unknown-edge", f"no edge {eid!r}") from None

    def edge_index(self, eid: str) -> int:
        self.edge(eid)
        return self._eindex[eid]

    def _adjacency(self, values) -> csr_matrix:
        n = self.n
        i = np.array([self._vindex[e.v_from] for e in self._edges], dtype=int)
        j = np.array([self._vindex[e.v_to] for e in self._edges], dtype=int)
        vals = np.asarray(values, dtype=float)
        return csr_matrix((np.r_[vals, vals], (np.r_[i, j], np.r_[j, i])), shape=(n, n))

    # -- matrices --------------------------------------------------------
    def laplacian(self) -> np.ndarray:
        """Weighted Laplacian with weights 1/length.

        The diagonal is the correctly rounded negative off-diagonal row sum, so
        the exact row sums are within half an ulp of the diagonal entry (and
        exactly zero whenever the weights add without rounding).
        """
        n = self.n
        L = np.zeros((n, n))
        for e in self._edges:
            i, j = self._vindex[e.v_from], self._vindex[e.v_to]
            L[i, j] -= e.weight
            L[j, i] -= e.weight
        np.fill_diagonal(L, 0.0)
        np.fill_diagonal(L, [-math.fsum(row) for row in L])
        return L

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for e in self._edges:
            deg[self._vindex[e.v_from]] += 1
            deg[self._vindex[e.v_to]] += 1
        return deg

    def is_tree(self) -> bool:
        return len(self._edges) == self.n - 1

    def leaf_count(self) -> int:
        return int(np.sum(self.degrees() == 1))

    def total_length(self) -> float:
        return float(sum(e.length for e in self._edges))

    # -- points ----------------------------------------------------------
    def canonical(self, pt: Point) -> Point:
        """Validate ``pt`` and map endpoint positions onto vertices."""
        if pt.vertex is not None:
            self.vertex_index(pt.vertex)
            return pt
        e = self.edge(pt.edge)
        if pt.delta == 0.0:
            return Point.at_vertex(e.v_from)
        if pt.delta == 1.0:
            return Point.at_vertex(e.v_to)
        return pt

    def locate(self, points: Sequence[Point]) -> Located:
        N = len(points)
        lo = np.empty(N, dtype=np.intp)
        hi = np.empty(N, dtype=np.intp)
        delta = np.zeros(N)
        eidx = np.full(N, -1, dtype=np.intp)
        length = np.zeros(N)
        for k, pt in enumerate(points):
            pt = self.canonical(pt)
            if pt.vertex is not None:
                lo[k] = hi[k] = self._vindex[pt.vertex]
            else:
                ei = self._eindex[pt.edge]
                e = self._edges[ei]
                lo[k] = self._vindex[e.v_from]
                hi[k] = self._vindex[e.v_to]
                delta[k] = pt.delta
                eidx[k] = ei
                length[k] = e.length
        return Located(lo, hi, delta, eidx, length)

    def all_vertices(self) -> list:
        return [Point.at_vertex(v) for v in self._vertices]

    # -- tree geometry ---------------------------------------------------
    def vertex_distances(self) -> np.ndarray:
        """Shortest-path lengths between vertices (cached)."""
        if self._vdist is None:
            if self.n == 1:
                self._vdist = np.zeros((1, 1))
            else:
                adj = self._adjacency([e.length for e in self._edges])
                self._vdist = shortest_path(adj, directed=False)
        return self._vdist

    def tree_distance_matrix(self, points_a: Sequence[Point],
                             points_b: Sequence[Point] | None = None) -> np.ndarray:
        """Geodesic distances between two point sets on a tree."""
        if not self.is_tree():
            raise GraphError("not-a-tree", "geodesic kernels need a tree")
        la = self.locate(points_a)
        lb = la if points_b is None else self.locate(points_b)
        return _backend.tree_distances(la, lb, self.vertex_distances())

    def tree_geodesic(self, u1: Point, u2: Point) -> float:
        return float(self.tree_distance_matrix([u1], [u2])[0, 0])

    # -- io --------------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "vertices": list(self._vertices),
            "edges": [{"id": e.id, "from": e.v_from, "to": e.v_to, "length": e.length}
                      for e in self._edges],
        }

    def content_hash(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def __eq__(self, other):
        return isinstance(other, GraphEE) and self.to_json() == other.to_json()

    def __hash__(self):
        return hash(self.content_hash())

    def __repr__(self):
        return f"GraphEE(n={self.n}, edges={len(self._edges)})"


def parse_graph(document) -> GraphEE:
    """Build a graph from JSON text or an already-decoded mapping.

    Expected layout::

        {"vertices": ["v1", ...],
         "edges": [{"id": "e1", "from": "v1", "to": "v2", "length": 1.0}, ...]}

    Raises
    ------
    GraphError
        with ``code`` one of ``duplicate-edge``, ``self-loop``, ``disconnected``,
        ``non-positive-length``, ``unknown-vertex`` (and a few schema codes).
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise GraphError("bad-json", str(exc)) from None
    if not isinstance(document, dict) or "vertices" not in document or "edges" not in document:
        raise GraphError("bad-schema", "expected an object with 'vertices' and 'edges'")
    edges = []
    for k, e in enumerate(document["edges"]):
        try:
            edges.append(Edge(str(e.get("id", f"e{k + 1}")), str(e["from"]), str(e["to"]),
                              float(e["length"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphError("bad-schema", f"edge #{k}: {exc}") from None
    return GraphEE(document["vertices"], edges)


def load_graph(path) -> GraphEE:
    with open(path) as fh:
        return parse_graph(fh.read())


# -- builders used by tests, examples and the CLI ----------------------------

def path_graph(n: int = 3, length: float = 1.0) -> GraphEE:
    """Path v1 - v2 - ... - vn with equal edge lengths."""
    verts = [f"v{i + 1}" for i in range(n)]
    edges = [Edge(f"e{i + 1}", verts[i], verts[i + 1], length) for i in range(n - 1)]
    return GraphEE(verts, edges)


def star_graph(leaves: int, length: float = 1.0) -> GraphEE:
    verts = ["hub"] + [f"leaf{i + 1}" for i in range(leaves)]
    edges = [Edge(f"e{i + 1}", "hub", f"leaf{i + 1}", length) for i in range(leaves)]
    return GraphEE(verts, edges)


def random_tree(rng: np.random.Generator, n: int, lengths=(0.5, 2.0)) -> GraphEE:
    verts = [f"v{i:03d}" for i in range(n)]
    edges = []
    for i in range(1, n):
        j = int(rng.integers(0, i))
        edges.append(Edge(f"e{i:03d}", verts[j], verts[i], float(rng.uniform(*lengths))))
    return GraphEE(verts, edges)


def random_connected_graph(rng: np.random.Generator, n: int, extra: int | None = None,
                           lengths=(0.5, 2.0)) -> GraphEE:
    """Random spanning tree plus ``extra`` chords (no repeats, no loops)."""
    tree = random_tree(rng, n, lengths)
    if n < 3:
        return tree
    present = {(e.v_from, e.v_to) for e in tree.edges}
    verts = list(tree.vertices)
    if extra is None:
        extra = int(rng.integers(0, n))
    edges = list(tree.edges)
    tries = 0
    while extra > 0 and tries < 50 * n:
        tries += 1
        a, b = sorted(rng.choice(verts, 2, replace=False))
        if (a, b) in present:
            continue
        present.add((a, b))
        edges.append(Edge(f"c{len(edges):03d}", a, b, float(rng.uniform(*lengths))))
        extra -= 1
    return GraphEE(verts, edges)


def random_points(g: GraphEE, N: int, rng: np.random.Generator) -> list:
    """``N`` points placed uniformly with respect to edge length."""
    lengths = np.array([e.length for e in g.edges])
    which = rng.choice(len(lengths), size=N, p=lengths / lengths.sum())
    deltas = rng.uniform(0.0, 1.0, size=N)
    return [g.canonical(Point.on_edge(g.edges[k].id, d)) for k, d in zip(which, deltas)]


def load_points(path) -> list:
    with open(path) as fh:
        doc = json.load(fh)
    if isinstance(doc, dict):
        doc = doc["points"]
    return [Point.from_json(o) for o in doc]
