"""Numerical PSD, CND and 1_p-CND verdicts.

Every verdict carries its margin (the extreme eigenvalue) and a witness
vector, so callers can tighten tolerances after the fact.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .config import TOL
from .spectral import is_symmetric


class PsdError(ValueError):
    pass


@dataclass(frozen=True)
class PsdVerdict:
    min_eig: float
    passed: bool
    tolerance: float
    witness: np.ndarray | None = field(default=None, compare=False)

    def to_json(self) -> dict:
        return {"min_eig": self.min_eig, "pass": self.passed, "tolerance": self.tolerance,
                "witness": None if self.witness is None else [float(v) for v in self.witness]}


def default_tol(A) -> float:
    A = np.asarray(A, dtype=float)
    return TOL.psd * (1.0 + (np.linalg.norm(A, 2) if A.size else 0.0))


def _require_symmetric(A, tol):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise PsdError(f"expected a square matrix, got shape {A.shape}")
    if not is_symmetric(A, max(tol, TOL.sym)):
        raise PsdError("matrix is not symmetric")
    return 0.5 * (A + A.T)


def psd_check(A, tol: float | None = None) -> PsdVerdict:
    """Pass iff the smallest eigenvalue is >= -tol."""
    A = np.asarray(A, dtype=float)
    tol = default_tol(A) if tol is None else tol
    A = _require_symmetric(A, tol)
    if A.size == 0:
        return PsdVerdict(0.0, True, tol, None)
    lam, V = np.linalg.eigh(A)
    return PsdVerdict(float(lam[0]), bool(lam[0] >= -tol), tol, V[:, 0])


def sum_zero_basis(k: int) -> np.ndarray:
    """Orthonormal k x (k-1) basis of {c : 1^T c = 0}.

    Built from the Householder reflection that sends 1/sqrt(k) to e_1; the
    remaining columns of the reflector span the orthogonal complement.
    """
    if k < 2:
        return np.zeros((k, 0))
    u = np.ones(k) / np.sqrt(k)
    v = u.copy()
    v[0] += 1.0  # u[0] > 0, so adding avoids cancellation
    v /= np.linalg.norm(v)
    H = np.eye(k) - 2.0 * np.outer(v, v)
    return H[:, 1:]


def cnd_check(A, tol: float | None = None) -> PsdVerdict:
    """Conditional negative semidefiniteness on the hyperplane 1^T c = 0.

    ``min_eig`` reports the margin as the smallest eigenvalue of -P^T A P, so
    the sign convention matches :func:`psd_check`.
    """
    A = np.asarray(A, dtype=float)
    tol = default_tol(A) if tol is None else tol
    A = _require_symmetric(A, tol)
    P = sum_zero_basis(A.shape[0])
    if P.shape[1] == 0:
        return PsdVerdict(0.0, True, tol, None)
    lam, V = np.linalg.eigh(-(P.T @ A @ P))
    return PsdVerdict(float(lam[0]), bool(lam[0] >= -tol), tol, P @ V[:, 0])


def block_constraint_basis(N: int, p: int) -> np.ndarray:
    """Basis of coefficient vectors (c_1, ..., c_N), c_i in R^p, with 1^T sum_i c_i = 0.

    Vectors are point-major: entry ``i*p + k`` is component ``k`` of ``c_i``.
    """
    return sum_zero_basis(N * p)


def one_cnd_check(gamma: Callable, points: Sequence, p: int, trials: int = 200,
                  rng: np.random.Generator | None = None, tol: float | None = None):
    """1_p-conditional negative semidefiniteness of a matrix-valued map.

    Assembles the Np x Np block matrix G with blocks gamma(x_i, x_j), then
    (a) draws ``trials`` random coefficient families with 1^T sum c_i = 0 and
    records the largest quadratic form, and (b) solves the exact eigenproblem
    of -G restricted to the constraint subspace.

    Returns
    -------
    (exact, randomized) : PsdVerdict, PsdVerdict
    """
    N = len(points)
    G = np.empty((N * p, N * p))
    for i in range(N):
        for j in range(N):
            G[i * p:(i + 1) * p, j * p:(j + 1) * p] = gamma(points[i], points[j])
    tol = default_tol(G) if tol is None else tol
    if not is_symmetric(G, max(tol, TOL.sym)):
        raise PsdError("gamma sample is not symmetric: gamma(x, y)^T != gamma(y, x)")
    exact = cnd_check(G, tol)
    rng = np.random.default_rng(0) if rng is None else rng
    P = block_constraint_basis(N, p)
    worst, wit = -np.inf, None
    for _ in range(trials):
        c = P @ rng.standard_normal(P.shape[1])
        c /= np.linalg.norm(c)
        form = float(c @ G @ c)
        if form > worst:
            worst, wit = form, c
    randomized = PsdVerdict(-worst, bool(worst <= tol), tol, wit)
    return exact, randomized
