"""Dense symmetric eigen-tools, Moore-Penrose inverses and block patterns."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import TOL


class SpectralError(ValueError):
    pass


@dataclass(frozen=True)
class SymEig:
    """Eigendecomposition A = W diag(lam) W^T with lam sorted descending."""

    W: np.ndarray
    lam: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.W * self.lam) @ self.W.T


@dataclass(frozen=True)
class QuasiLaplacianReport:
    is_symmetric: bool
    is_psd: bool
    null_dim: int
    null_vector_is_ones: bool
    min_eig: float

    @property
    def ok(self) -> bool:
        return self.is_symmetric and self.is_psd and self.null_dim == 1 and self.null_vector_is_ones


def _scale(A) -> float:
    return max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0


def is_symmetric(A, tol=TOL.sym) -> bool:
    A = np.asarray(A, dtype=float)
    return A.ndim == 2 and A.shape[0] == A.shape[1] and \
        float(np.max(np.abs(A - A.T), initial=0.0)) <= tol * _scale(A)


def sym_eig(A) -> SymEig:
    """Symmetric eigendecomposition with near-zero eigenvalues snapped to 0.

    Raises
    ------
    SpectralError
        if ``A`` is not symmetric within ``TOL.sym`` or LAPACK fails.
    """
    A = np.asarray(A, dtype=float)
    if not is_symmetric(A):
        raise SpectralError("sym_eig: matrix is not symmetric")
    A = 0.5 * (A + A.T)
    try:
        lam, W = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise SpectralError(f"sym_eig: eigensolver failed ({exc})") from None
    order = np.argsort(lam)[::-1]
    lam, W = lam[order], W[:, order]
    lam = np.where(np.abs(lam) < TOL.zero * _scale(A), 0.0, lam)
    return SymEig(W, lam)


def pinv(A) -> np.ndarray:
    """Moore-Penrose inverse of a symmetric matrix via :func:`sym_eig`."""
    e = sym_eig(A)
    inv = np.zeros_like(e.lam)
    nz = e.lam != 0.0
    inv[nz] = 1.0 / e.lam[nz]
    out = (e.W * inv) @ e.W.T
    return 0.5 * (out + out.T)


def penrose_residuals(A, G) -> tuple:
    """Relative residuals of the four Penrose identities for G = A^-."""
    A = np.asarray(A, dtype=float)
    G = np.asarray(G, dtype=float)
    na = max(np.linalg.norm(A), 1e-300)
    ng = max(np.linalg.norm(G), 1e-300)
    AG, GA = A @ G, G @ A
    return (np.linalg.norm(AG @ A - A) / na,
            np.linalg.norm(GA @ G - G) / ng,
            np.linalg.norm(AG - AG.T) / max(np.linalg.norm(AG), 1e-300),
            np.linalg.norm(GA - GA.T) / max(np.linalg.norm(GA), 1e-300))


def check_quasi_laplacian(A) -> QuasiLaplacianReport:
    """Symmetric PSD with exactly one null eigenvalue whose eigenvector is 1."""
    A = np.asarray(A, dtype=float)
    sym = is_symmetric(A)
    lam = np.linalg.eigvalsh(0.5 * (A + A.T))
    thr = TOL.zero * _scale(A) * max(1, A.shape[0])
    min_eig = float(lam.min())
    psd = min_eig >= -thr
    null_dim = int(np.sum(np.abs(lam) <= thr))
    ones = np.ones(A.shape[0])
    kills_ones = float(np.linalg.norm(A @ ones)) <= thr * np.sqrt(A.shape[0])
    return QuasiLaplacianReport(sym, psd, null_dim, kills_ones and null_dim == 1, min_eig)


def mp_block(A, B, p: int) -> np.ndarray:
    """Block pattern I_p (x) A + (1_{pxp} - I_p) (x) B."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise SpectralError(f"mp_block: shapes {A.shape} and {B.shape} differ")
    if p < 1:
        raise SpectralError("mp_block: p must be >= 1")
    Ip = np.eye(p)
    return np.kron(Ip, A) + np.kron(np.ones((p, p)) - Ip, B)


# -- matrix CSV ---------------------------------------------------------------

def write_matrix_csv(path, M) -> None:
    """Row-major CSV with a ``# rows,cols`` header line."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w") as fh:
        fh.write(f"# {M.shape[0]},{M.shape[1]}\n")
        for row in M:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_matrix_csv(path) -> np.ndarray:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise SpectralError(f"{path}: empty matrix file")
    shape = None
    if lines[0].startswith("#"):
        try:
            r, c = (int(v) for v in lines[0][1:].split(","))
        except ValueError:
            raise SpectralError(f"{path}: bad header {lines[0]!r}") from None
        shape = (r, c)
        lines = lines[1:]
    try:
        M = np.array([[float(v) for v in ln.split(",")] for ln in lines])
    except ValueError as exc:
        raise SpectralError(f"{path}: {exc}") from None
    if shape is not None and M.shape != shape:
        raise SpectralError(f"{path}: header says {shape}, found {M.shape}")
    return M


def pattern_blocks(diag, off, p: int) -> np.ndarray:
    """Point-major block matrix whose (a, b) block is M_p(diag[a, b], off[a, b]).

    Row ``a*p + i`` holds component ``i`` at point ``a``.
    """
    diag = np.asarray(diag, dtype=float)
    off = np.asarray(off, dtype=float)
    Ip = np.eye(p)
    return np.kron(diag, Ip) + np.kron(off, np.ones((p, p)) - Ip)
