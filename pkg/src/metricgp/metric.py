"""The matrix-valued pseudo-variogram metric D and the scalar resistance metric.

``D(u1, u2)`` is the pseudo-variogram of the constructed field,
``D_ij = Var(Z_i(u1) - Z_j(u2))``.  It is matrix-homogeneous, so it is stored
as two scalars: the common diagonal value (the resistance metric) and the
common off-diagonal value.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _backend
from .field import FieldModel, build_field_model
from .graph import GraphEE, Point
from .spectral import pinv


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class MultiMetricValue:
    """D(u1, u2) stored as its diagonal and off-diagonal values."""

    diag: float
    off: float
    p: int

    def matrix(self) -> np.ndarray:
        M = np.full((self.p, self.p), self.off)
        np.fill_diagonal(M, self.diag)
        return M

    @property
    def is_diagonal_zero(self) -> bool:
        return self.diag == 0.0


def _self_terms(St, loc):
    """Interpolated self-forms d^T St d and bridge variances, per point.

    Same operation order as the pairwise kernels, so identical points give
    bitwise-identical values and an exact zero distance.
    """
    w0, w1 = 1.0 - loc.delta, loc.delta
    lo, hi = loc.lo, loc.hi
    s = w0 * w0 * St[lo, lo]
    s = s + w0 * w1 * St[lo, hi]
    s = s + w1 * w0 * St[hi, lo]
    s = s + w1 * w1 * St[hi, hi]
    b = np.where(loc.eidx >= 0, loc.length * (np.minimum(loc.delta, loc.delta) - loc.delta * loc.delta), 0.0)
    return s, b


def distance_blocks(m: FieldModel, pts_a: Sequence[Point], pts_b: Sequence[Point] | None = None):
    """Diagonal and off-diagonal values of D between two point sets.

    Returns
    -------
    (Ddiag, Doff) : arrays of shape (len(pts_a), len(pts_b))
    """
    g = m.graph
    la = g.locate(pts_a)
    lb = la if pts_b is None else g.locate(pts_b)
    s, x, B = _backend.pair_forms(la, lb, m.St, m.Xt)
    sa, ba = _self_terms(m.St, la)
    sb, bb = (sa, ba) if pts_b is None else _self_terms(m.St, lb)
    va = (sa + ba)[:, None]
    vb = (sb + bb)[None, :]
    Ddiag = va + vb - 2.0 * (s + B)
    Doff = va + vb - 2.0 * (x + m.beta * B)
    # round-off can leave -1e-17 where the exact value is 0
    return np.maximum(Ddiag, 0.0), np.maximum(Doff, 0.0)


def distance_D(m: FieldModel, u1: Point, u2: Point) -> MultiMetricValue:
    d, o = distance_blocks(m, [u1], [u2])
    return MultiMetricValue(float(d[0, 0]), float(o[0, 0]), m.p)


def pseudo_variogram_from_cov(K: Callable, u1, u2) -> np.ndarray:
    """diag(Var(u1)) 1^T + 1 diag(Var(u2))^T - 2 Cov(u1, u2) for a covariance oracle."""
    v1 = np.diag(np.asarray(K(u1, u1), dtype=float))
    v2 = np.diag(np.asarray(K(u2, u2), dtype=float))
    C = np.asarray(K(u1, u2), dtype=float)
    return v1[:, None] + v2[None, :] - 2.0 * C


def resistance_dR(m: FieldModel, u1: Point, u2: Point) -> float:
    return distance_D(m, u1, u2).diag


def resistance_matrix(g: GraphEE, pts_a, pts_b=None) -> np.ndarray:
    """Scalar resistance metric between point sets, without a field model."""
    Sigma = pinv(g.laplacian())
    la = g.locate(pts_a)
    lb = la if pts_b is None else g.locate(pts_b)
    s, _, B = _backend.pair_forms(la, lb, Sigma, Sigma)
    sa, ba = _self_terms(Sigma, la)
    sb, bb = (sa, ba) if pts_b is None else _self_terms(Sigma, lb)
    d = (sa + ba)[:, None] + (sb + bb)[None, :] - 2.0 * (s + B)
    return np.maximum(d, 0.0)


def resistance_oracle(g: GraphEE, u1: Point, u2: Point, j: int = 0) -> float:
    """Resistance via the grounded Laplacian L + e_j e_j^T.

    Independent of the pseudo-inverse route: the vertex part is a linear solve,
    the bridge part is written out case by case.
    """
    n = g.n
    loc = g.locate([u1, u2])
    dvec = loc.delta_matrix(n)
    diff = dvec[0] - dvec[1]
    Lg = g.laplacian().copy()
    Lg[j, j] += 1.0
    vert = float(diff @ np.linalg.solve(Lg, diff))
    e1, e2 = loc.eidx
    d1, d2 = loc.delta
    l1, l2 = loc.length
    if e1 >= 0 and e1 == e2:
        bridge = l1 * (abs(d1 - d2) - (d1 - d2) ** 2)
    else:
        bridge = l1 * d1 * (1 - d1) + l2 * d2 * (1 - d2)
    return vert + bridge


# -- asymptotic regimes -----------------------------------------------------

REGIMES = {
    "p-inf": "p -> inf, alpha fixed",
    "alpha-inf": "alpha -> inf, p fixed",
    "alpha-zero": "alpha -> 0+, p fixed",
    "p-inf-small-tau": "p -> inf, alpha = 1/(p tau), 0 < tau <= smallest positive eigenvalue of Sigma",
    "p-inf-large-tau": "p -> inf, alpha = 1/(p tau), tau >= largest eigenvalue of Sigma",
}


@dataclass(frozen=True)
class AsymptoticLimit:
    regime: str
    Q: np.ndarray
    X: np.ndarray
    D_off: float


def _sigma_range(g: GraphEE):
    lam = np.sort(np.linalg.eigvalsh(pinv(g.laplacian())))[::-1]
    pos = lam[lam > 1e-12 * max(1.0, lam[0])]
    return float(pos[0]), float(pos[-1])


def default_tau(g: GraphEE, regime: str) -> float:
    lam1, lam_small = _sigma_range(g)
    if regime == "p-inf-small-tau":
        return 0.5 * lam_small
    if regime == "p-inf-large-tau":
        return 2.0 * lam1
    raise MetricError(f"regime {regime!r} takes no tau")


def regime_parameters(g: GraphEE, regime: str, scale: float, tau: float | None = None,
                      p_fixed: int = 3, alpha_fixed: float = 1.0):
    """(p, alpha) for a finite model at size ``scale`` along ``regime``."""
    if regime == "p-inf":
        return int(scale), alpha_fixed
    if regime == "alpha-inf":
        return p_fixed, float(scale)
    if regime == "alpha-zero":
        return p_fixed, 1.0 / float(scale)
    if regime in ("p-inf-small-tau", "p-inf-large-tau"):
        tau = default_tau(g, regime) if tau is None else tau
        _check_tau(g, regime, tau)
        return int(scale), 1.0 / (int(scale) * tau)
    raise MetricError(f"unknown regime {regime!r}; choose from {sorted(REGIMES)}")


def _check_tau(g, regime, tau):
    lam1, lam_small = _sigma_range(g)
    if tau is None or tau <= 0:
        raise MetricError(f"regime {regime} needs tau > 0")
    if regime == "p-inf-small-tau" and tau > lam_small * (1 + 1e-12):
        raise MetricError(f"tau={tau} exceeds the smallest positive Sigma eigenvalue {lam_small}")
    if regime == "p-inf-large-tau" and tau < lam1 * (1 - 1e-12):
        raise MetricError(f"tau={tau} is below the largest Sigma eigenvalue {lam1}")


def asymptotic_limit(g: GraphEE, regime: str, u1: Point, u2: Point, p: int, alpha: float,
                     tau: float | None = None) -> AsymptoticLimit:
    """Predicted limits of (Q, X, D_ij for i != j), evaluated at (p, alpha).

    The first two regimes give asymptotic equivalents for Q rather than limits.
    Limits involving the resistance metric assume beta = 1.
    """
    n = g.n
    L = g.laplacian()
    Sigma = pinv(L)
    I = np.eye(n)
    J = np.ones((n, n))
    dR = float(resistance_matrix(g, [u1], [u2])[0, 0])
    dv = g.locate([u1, u2]).delta_matrix(n)
    if regime in ("p-inf", "alpha-inf"):
        return AsymptoticLimit(regime, alpha * (p - 1) * I, Sigma, dR)
    if regime == "alpha-zero":
        return AsymptoticLimit(regime, L, -J / (alpha * n * (p - 1)), 2.0 / (alpha * n * p))
    if regime in ("p-inf-small-tau", "p-inf-large-tau"):
        tau = default_tau(g, regime) if tau is None else tau
        _check_tau(g, regime, tau)
        if regime == "p-inf-small-tau":
            return AsymptoticLimit(regime, I / tau, Sigma - tau * I,
                                   dR + 2.0 * tau * float(dv[0] @ dv[1]))
        return AsymptoticLimit(regime, L + J / (n * tau), -(tau / n) * J,
                               dR + 2.0 * tau / n + 2.0 * float(dv[0] @ Sigma @ dv[1]))
    raise MetricError(f"unknown regime {regime!r}; choose from {sorted(REGIMES)}")


def _rel(A, B) -> float:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    return float(np.linalg.norm(A - B) / np.linalg.norm(B))


def asymptotic_gaps(g: GraphEE, regime: str, scale: float, u1: Point, u2: Point,
                    tau: float | None = None, beta: float = 1.0) -> dict:
    """Relative distances between a finite model and the predicted limits."""
    p, alpha = regime_parameters(g, regime, scale, tau)
    m = build_field_model(g, p, alpha, beta)
    lim = asymptotic_limit(g, regime, u1, u2, p, alpha, tau)
    D = distance_D(m, u1, u2)
    return {"p": p, "alpha": alpha,
            "Q": _rel(m.Q, lim.Q), "X": _rel(m.X, lim.X),
            "D_off": abs(D.off - lim.D_off) / abs(lim.D_off)}
