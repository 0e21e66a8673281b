"""Numerical tolerances shared by every module.

All thresholds are relative unless stated otherwise.  Keeping them in one
frozen record means a test can tighten or loosen a single value without
chasing literals across the code base.
"""
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    sym: float = 1e-9        # symmetry check, relative to max(1, |A|)
    orth: float = 1e-9       # W^T W = I
    rec: float = 1e-9        # |W L W^T - A| <= rec * |A|
    zero: float = 1e-10      # eigenvalue snapping, relative to max(1, |A|)
    psd: float = 1e-8        # psd/cnd verdicts: tol = psd * (1 + |A|)
    equality: float = 1e-12  # parameter equalities in certificates
    jitter_steps: int = 6    # max Cholesky jitter escalations


TOL = Tolerances()
