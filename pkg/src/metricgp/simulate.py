"""Exact Gaussian simulation at finite point sets by Cholesky factorisation.

Random numbers come from numpy's Philox counter-based generator.  Realisation
``k`` uses the k-th child of ``SeedSequence(seed)``, so every realisation has
its own stream and the output does not depend on how work is split.  The
matrix products run in fixed chunks with BLAS pinned to one thread, which
keeps results bit-identical across METRICGP_THREADS settings.
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from ._backend import thread_count
from .config import TOL
from .field import FieldModel
from .graph import GraphEE, Point
from .kernels import KernelSpec, kernel_cov
from .tree_kernels import TreeKernelSpec, tree_kernel_cov


class SimulationError(RuntimeError):
    pass


CHUNK = 256  # realisations per matrix product; fixed so results ignore threading


def assemble_cov(kernel, points: Sequence[Point], g: GraphEE | None = None,
                 model: FieldModel | None = None) -> np.ndarray:
    """Point-major Np x Np covariance of ``kernel`` over ``points``.

    ``kernel`` may be a :class:`FieldModel` (the constructed field Z), a
    :class:`KernelSpec` (needs ``model`` for its metric), a
    :class:`TreeKernelSpec` (needs ``g``) or a callable ``(u1, u2) -> p x p``.
    """
    points = list(points)
    if isinstance(kernel, FieldModel):
        return kernel.assemble(points, "Z")
    if isinstance(kernel, KernelSpec):
        if model is None:
            raise SimulationError("a metric kernel needs a field model for its distance")
        return kernel_cov(kernel, model, points)
    if isinstance(kernel, TreeKernelSpec):
        if g is None:
            raise SimulationError("a tree kernel needs the tree graph")
        return tree_kernel_cov(kernel, g, points)
    if callable(kernel):
        return _assemble_callable(kernel, points)
    raise SimulationError(f"cannot assemble a covariance from {type(kernel).__name__}")


def _assemble_callable(K: Callable, points) -> np.ndarray:
    N = len(points)
    blocks = {}
    for i in range(N):
        for j in range(i, N):
            try:
                blocks[i, j] = np.atleast_2d(np.asarray(K(points[i], points[j]), dtype=float))
            except Exception as exc:
                raise SimulationError(f"kernel evaluation failed at pair ({i}, {j}): {exc}") from exc
    p = blocks[0, 0].shape[0]
    C = np.empty((N * p, N * p))
    for (i, j), B in blocks.items():
        C[i * p:(i + 1) * p, j * p:(j + 1) * p] = B
        C[j * p:(j + 1) * p, i * p:(i + 1) * p] = B.T
    return C


def jittered_cholesky(C: np.ndarray):
    """Lower Cholesky factor, adding 10^(-12+k) trace/N to the diagonal on failure.

    Returns ``(L, jitter)``.  The all-zero matrix factors as zero.
    """
    C = 0.5 * (C + C.T)
    n = C.shape[0]
    if n == 0 or not np.any(C):
        return np.zeros_like(C), 0.0
    scale = float(np.trace(C)) / n
    try:
        return np.linalg.cholesky(C), 0.0
    except np.linalg.LinAlgError:
        pass
    for k in range(TOL.jitter_steps):
        jit = 10.0 ** (-12 + k) * scale
        try:
            return np.linalg.cholesky(C + jit * np.eye(n)), jit
        except np.linalg.LinAlgError:
            continue
    min_eig = float(np.linalg.eigvalsh(C)[0])
    raise SimulationError(f"Cholesky failed after {TOL.jitter_steps} jitter steps; "
                          f"smallest eigenvalue {min_eig:.3g}")


@dataclass
class SampleSet:
    points: list
    p: int
    cov: np.ndarray
    chol: np.ndarray
    realizations: np.ndarray  # (n_real, N p), point-major
    seed: int
    jitter: float = 0.0
    meta: dict = field(default_factory=dict)

    def value(self, real: int, point: int, comp: int) -> float:
        return float(self.realizations[real, point * self.p + comp])

    def to_csv(self, path=None) -> str | None:
        """Rows ``point_id, component, realization, value``; returns text if no path."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["point_id", "component", "realization", "value"])
        N = len(self.points)
        labels = [u.label() if hasattr(u, "label") else str(i) for i, u in enumerate(self.points)]
        for r in range(self.realizations.shape[0]):
            row = self.realizations[r]
            for i in range(N):
                for k in range(self.p):
                    w.writerow([labels[i], k + 1, r, repr(float(row[i * self.p + k]))])
        text = buf.getvalue()
        if path is None:
            return text
        with open(path, "w", newline="") as fh:
            fh.write(text)
        return None


def standard_normals(seed: int, n_real: int, dim: int) -> np.ndarray:
    """(n_real, dim) draws; row k from Philox seeded by child k of SeedSequence(seed)."""
    children = np.random.SeedSequence(int(seed)).spawn(n_real)
    out = np.empty((n_real, dim))
    for k, ss in enumerate(children):
        out[k] = np.random.Generator(np.random.Philox(ss)).standard_normal(dim)
    return out


def sample_from_cov(C: np.ndarray, p: int, n_real: int, seed: int, points=None) -> SampleSet:
    """Draw ``n_real`` realisations of N(0, C)."""
    if n_real < 1:
        raise SimulationError("n_real must be >= 1")
    C = np.asarray(C, dtype=float)
    L, jit = jittered_cholesky(C)
    Z = standard_normals(seed, n_real, C.shape[0])
    out = np.empty_like(Z)
    starts = list(range(0, n_real, CHUNK))

    def run(s):
        e = min(s + CHUNK, n_real)
        out[s:e] = Z[s:e] @ L.T

    with threadpool_limits(limits=1):
        workers = thread_count()
        if workers > 1 and len(starts) > 1:
            with ThreadPoolExecutor(workers) as ex:
                list(ex.map(run, starts))
        else:
            for s in starts:
                run(s)
    pts = list(points) if points is not None else list(range(C.shape[0] // p))
    return SampleSet(pts, p, C, L, out, int(seed), jit,
                     {"generator": "Philox", "stream_split": "SeedSequence.spawn per realization",
                      "jitter": jit, "n_real": n_real})


def sample(kernel, points: Sequence[Point], n_real: int, seed: int,
           g: GraphEE | None = None, model: FieldModel | None = None) -> SampleSet:
    """Assemble the covariance of ``kernel`` over ``points`` and draw realisations."""
    points = list(points)
    C = assemble_cov(kernel, points, g, model)
    p = C.shape[0] // max(len(points), 1)
    return sample_from_cov(C, p, n_real, seed, points)


def empirical_cov(realizations) -> np.ndarray:
    """Unbiased sample covariance of realisations stored as rows."""
    R = np.asarray(realizations, dtype=float)
    if R.ndim != 2 or R.shape[0] < 2:
        raise SimulationError("empirical covariance needs at least 2 realizations")
    Rc = R - R.mean(axis=0)
    return Rc.T @ Rc / (R.shape[0] - 1)
