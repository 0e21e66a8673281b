"""Vertex and edge Gaussian fields on a graph with Euclidean edges.

The vertex field has the homogeneous conditional-independence precision
``Theta = M_p(Q, -alpha I)``; its covariance is ``M_p(S~, X~)`` with
``S~ = Sigma + k1 J`` and ``X~ = X + k2 J`` where ``Sigma = pinv(L)``.  Values
inside edges interpolate the vertex field linearly, and an independent
Brownian bridge with cross-correlation ``beta`` is added on every edge.
"""
from __future__ import annotations

import threading
from typing import Sequence

import numpy as np

from . import _backend
from .graph import GraphEE, Point
from .spectral import SymEig, mp_block, pattern_blocks, pinv, sym_eig


class FieldError(ValueError):
    pass


def q_eigenvalues(lam, p, alpha):
    """Eigenvalues of Q for Sigma-eigenvalues ``lam`` (0 marks the null direction)."""
    lam = np.asarray(lam, dtype=float)
    mu = np.where(lam > 0, 1.0 / np.where(lam > 0, lam, 1.0), 0.0)
    a2 = alpha * (p - 2)
    # (mu - a2)^2 + 4 a^2 (p-1) equals mu^2 - 2 a2 mu + a^2 p^2 without cancellation
    disc = (mu - a2) ** 2 + 4.0 * alpha * alpha * (p - 1)
    return 0.5 * (mu + a2 + np.sqrt(disc))


def x_eigenvalues(lam, p, alpha):
    """Eigenvalues of X, rationalised so no subtraction of close terms occurs."""
    lam = np.asarray(lam, dtype=float)
    pos = lam > 0
    out = np.full(lam.shape, -1.0 / (alpha * (p - 1)))
    l = lam[pos]
    al = alpha * l
    sqrtR = np.sqrt((1.0 - (p - 2) * al) ** 2 + 4.0 * (p - 1) * al * al)
    bracket = (p - 2) * (p * p * al - 2.0 * (p - 2)) / (sqrtR + 1.0) + p * p
    out[pos] = al * l * bracket / (2.0 * (p - 1) * (sqrtR + 1.0))
    return out


class FieldModel:
    """All matrices of the construction for one (graph, p, alpha, beta).

    Built by :func:`build_field_model`.  Instances are treated as immutable;
    the np x np vertex covariance is assembled lazily, once.
    """

    def __init__(self, graph: GraphEE, p: int, alpha: float, beta: float):
        self.graph = graph
        self.p = p
        self.alpha = alpha
        self.beta = beta
        n = graph.n
        self.n = n
        self.L = graph.laplacian()
        self.Sigma = pinv(self.L)
        self.eig: SymEig = sym_eig(self.Sigma)
        W, lam = self.eig.W, self.eig.lam
        self.q_eig = q_eigenvalues(lam, p, alpha)
        self.x_eig = x_eigenvalues(lam, p, alpha)
        self.Q = _sym((W * self.q_eig) @ W.T)
        self.X = _sym((W * self.x_eig) @ W.T)
        self.k1 = (p - 1) / (alpha * n * p * p)
        self.k2 = (p * p - p + 1) / (alpha * n * p * p * (p - 1))
        J = np.ones((n, n))
        self.St = self.Sigma + self.k1 * J
        self.Xt = self.X + self.k2 * J
        self._K = None
        self._lock = threading.Lock()

    @property
    def Theta(self) -> np.ndarray:
        return mp_block(self.Q, -self.alpha * np.eye(self.n), self.p)

    @property
    def K_vertices(self) -> np.ndarray:
        """Vertex covariance M_p(S~, X~) in component-major order."""
        if self._K is None:
            with self._lock:
                if self._K is None:
                    self._K = mp_block(self.St, self.Xt, self.p)
        return self._K

    # -- pairwise building blocks ------------------------------------------
    def delta_vector(self, u: Point) -> np.ndarray:
        return self.graph.locate([u]).delta_matrix(self.n)[0]

    def forms(self, pts_a: Sequence[Point], pts_b: Sequence[Point] | None = None):
        """Interpolated vertex forms and bridge covariances between point sets.

        Returns ``(s, x, B)`` with s = d_a^T S~ d_b, x = d_a^T X~ d_b and B the
        unit-variance bridge covariance (zero across different edges).
        """
        la = self.graph.locate(pts_a)
        lb = la if pts_b is None else self.graph.locate(pts_b)
        return _backend.pair_forms(la, lb, self.St, self.Xt)

    def cov_blocks(self, pts_a, pts_b=None, part: str = "Z"):
        """Diagonal and off-diagonal values of the pattern blocks of a covariance.

        ``part`` selects ``"V"`` (vertex field), ``"E"`` (edge bridges) or
        ``"Z"`` (their sum).
        """
        s, x, B = self.forms(pts_a, pts_b)
        if part == "V":
            return s, x
        if part == "E":
            return B, self.beta * B
        if part == "Z":
            return s + B, x + self.beta * B
        raise FieldError(f"unknown covariance part {part!r}")

    def assemble(self, points: Sequence[Point], part: str = "Z") -> np.ndarray:
        """Point-major Np x Np covariance matrix over ``points``."""
        d, o = self.cov_blocks(points, None, part)
        return pattern_blocks(d, o, self.p)

    # -- single-pair API ---------------------------------------------------
    def cov_ZV(self, u1: Point, u2: Point) -> np.ndarray:
        d, o = self.cov_blocks([u1], [u2], "V")
        return pattern_blocks(d, o, self.p)

    def cov_ZE(self, u1: Point, u2: Point) -> np.ndarray:
        d, o = self.cov_blocks([u1], [u2], "E")
        return pattern_blocks(d, o, self.p)

    def cov_Z(self, u1: Point, u2: Point) -> np.ndarray:
        d, o = self.cov_blocks([u1], [u2], "Z")
        return pattern_blocks(d, o, self.p)

    def __repr__(self):
        return f"FieldModel(n={self.n}, p={self.p}, alpha={self.alpha}, beta={self.beta})"


def _sym(A):
    return 0.5 * (A + A.T)


def build_field_model(g: GraphEE, p: int, alpha: float, beta: float = 0.0) -> FieldModel:
    """Validate parameters and build a :class:`FieldModel`.

    Parameters
    ----------
    g : GraphEE
    p : int
        Number of components, at least 2.  The scalar case is the plain
        resistance metric; use :func:`metricgp.metric.resistance_matrix`.
    alpha : float
        Positive cross-precision scale.
    beta : float
        Cross-correlation of the edge bridges, in [0, 1].
    """
    if isinstance(p, bool) or int(p) != p:
        raise FieldError(f"p must be an integer, got {p!r}")
    p = int(p)
    if p == 1:
        raise FieldError("p=1 is the scalar case: use the resistance metric directly")
    if p < 2:
        raise FieldError(f"p must be >= 2, got {p}")
    alpha = float(alpha)
    beta = float(beta)
    if not (np.isfinite(alpha) and alpha > 0):
        raise FieldError(f"alpha must be positive, got {alpha}")
    if not 0.0 <= beta <= 1.0:
        raise FieldError(f"beta must lie in [0, 1], got {beta}")
    return FieldModel(g, p, alpha, beta)


def q_matrix_direct(L, p, alpha) -> np.ndarray:
    """Q from the matrix square-root definition (test oracle only)."""
    from scipy.linalg import sqrtm

    n = L.shape[0]
    I = np.eye(n)
    arg = L @ L - 2 * alpha * (p - 2) * L + alpha ** 2 * p ** 2 * I
    return 0.5 * (L + alpha * (p - 2) * I + np.real(sqrtm(arg)))
