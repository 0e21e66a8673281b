"""Scalar kernel families, kernel composition and multivariate validity checks.

Scalar families (all equal to 1 at t = 0)::

    SG(t; a, b, v)  = (1 + t/b)^(-v/2) K_v(sqrt((b + t)/a)) / K_v(sqrt(b/a))
    M(t; a, v)      = 2^(1-v)/Gamma(v) (t/a)^(v/2) K_v(sqrt(t/a))
    C(t; b, v)      = (1 + t/b)^(-v)

Each is a Laplace transform of a nonnegative density, i.e. completely
monotone, so composing it with a Bernstein function of the matrix metric D
gives a valid matrix-valued covariance.  Multivariate families attach one
parameter set per (i, j) entry; whether the resulting matrix kernel is
positive semidefinite is decided by the ``certify_*`` functions, which
return a :class:`ValidityCertificate` listing each condition with its margin.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special as sp

from .config import TOL
from .field import FieldModel
from .metric import MultiMetricValue, distance_blocks
from .psd import cnd_check, psd_check


class KernelError(ValueError):
    pass


# -- scalar families ---------------------------------------------------------

def _log_kv(nu, z):
    """log K_nu(z) through the exponentially scaled Bessel function."""
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        return np.log(sp.kve(nu, z)) - z


def sg_scalar(t, alpha, beta, nu):
    """Shkarofsky-Gneiting correlation, vectorised over ``t``."""
    if not (alpha > 0 and beta > 0):
        raise KernelError(f"SG needs alpha, beta > 0 (alpha={alpha}, beta={beta})")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise KernelError("SG evaluated at negative argument")
    z0 = np.sqrt(beta / alpha)
    z1 = np.sqrt((beta + t) / alpha)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        r = sp.kve(nu, z1) / sp.kve(nu, z0)
    # exp(-(z1 - z0)) with the difference formed without cancellation
    dz = t / (np.sqrt(alpha) * (np.sqrt(beta + t) + np.sqrt(beta)))
    out = np.power(1.0 + t / beta, -0.5 * nu) * r * np.exp(-dz)
    bad = ~np.isfinite(out)
    if np.any(bad):
        tb = float(np.ravel(t)[np.flatnonzero(np.ravel(bad))[0]])
        raise KernelError(
            f"Bessel overflow/underflow in SG: nu={nu}, K argument "
            f"{np.sqrt((beta + tb) / alpha):.6g} at t={tb:.6g}, denominator argument {z0:.6g}")
    return out


def matern_scalar(t, alpha, nu):
    """Matern correlation in the squared-range parametrisation; M(0) = 1."""
    if not (alpha > 0 and nu > 0):
        raise KernelError(f"Matern needs alpha, nu > 0 (alpha={alpha}, nu={nu})")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise KernelError("Matern evaluated at negative argument")
    x = np.sqrt(t / alpha)
    out = np.ones_like(x)
    pos = x > 1e-300
    xp = x[pos]
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        logv = (1.0 - nu) * np.log(2.0) - sp.gammaln(nu) + nu * np.log(xp) + _log_kv(nu, xp)
    v = np.exp(logv)
    # K_nu overflow at tiny arguments: the limit value is 1
    v = np.where(np.isfinite(logv), v, 1.0)
    out[pos] = np.minimum(v, 1.0)
    return out


def cauchy_scalar(t, beta, nu):
    """Generalised Cauchy correlation (1 + t/beta)^(-nu)."""
    if not (beta > 0 and nu > 0):
        raise KernelError(f"Cauchy needs beta, nu > 0 (beta={beta}, nu={nu})")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise KernelError("Cauchy evaluated at negative argument")
    return np.power(1.0 + t / beta, -nu)


def exp_scalar(t):
    return np.exp(-np.asarray(t, dtype=float))


# Completely monotone functions (psi) and Bernstein functions (g) that may be
# composed without an explicit override.
CM_CATALOG: dict[str, Callable] = {
    "exp": lambda t: exp_scalar(t),
    "sg": lambda t, alpha, beta, nu: sg_scalar(t, alpha, beta, nu),
    "matern": lambda t, alpha, nu: matern_scalar(t, alpha, nu),
    "cauchy": lambda t, beta, nu: cauchy_scalar(t, beta, nu),
}


def _power(t, theta=1.0):
    if not 0.0 < theta <= 1.0:
        raise KernelError(f"theta must lie in (0, 1], got {theta}")
    return np.power(t, theta)


BERNSTEIN_CATALOG: dict[str, Callable] = {
    "power": _power,
    "rational": lambda t: t / (1.0 + t),
    "log1p": lambda t: np.log1p(t),
}


# -- certificates --------------------------------------------------------------

THEOREMS = ("T2", "T3", "T4A", "T4B", "T5A", "T5B", "T6", "T7", "none")


@dataclass(frozen=True)
class Check:
    condition: str
    passed: bool
    margin: float
    note: str = ""

    def to_json(self) -> dict:
        m = self.margin
        return {"condition": self.condition, "pass": self.passed,
                "margin": None if not np.isfinite(m) else float(m), "note": self.note}


@dataclass(frozen=True)
class ValidityCertificate:
    theorem_applied: str
    checks: tuple = ()
    sampled: bool = False

    @property
    def valid(self) -> bool:
        return self.theorem_applied != "none" and bool(self.checks) and all(c.passed for c in self.checks)

    def failing(self) -> list:
        return [c for c in self.checks if not c.passed]

    def to_json(self) -> dict:
        return {"theorem_applied": self.theorem_applied, "valid": self.valid,
                "sampled": self.sampled, "checks": [c.to_json() for c in self.checks]}


def _cnd(name, A) -> Check:
    v = cnd_check(np.asarray(A, dtype=float))
    return Check(f"{name} conditionally negative semidefinite", v.passed, v.min_eig)


def _psd(name, A) -> Check:
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        return Check(f"{name} positive semidefinite", False, float("nan"), "non-finite entries")
    v = psd_check(A)
    return Check(f"{name} positive semidefinite", v.passed, v.min_eig)


# -- kernel specs --------------------------------------------------------------

FAMILIES = ("composed", "mixture", "sg2", "matern_p", "cauchy_p", "sg_p")


@dataclass
class KernelSpec:
    """A kernel family with its parameters and (once certified) its certificate.

    ``params`` layout per family:

    composed : psi, psi_params, g, g_params, xi, optional sigma (p x p PSD scale)
    mixture  : atoms = [(xi_k, F_k), ...], theta
    sg2      : sigma1, sigma2, rho, alpha1, alpha2, alpha12, beta1, beta2,
               beta12, nu1, nu2, nu12, theta
    matern_p : sigma, alpha, nu (p x p), theta, optional beta (scalar for case B)
    cauchy_p : sigma, beta (p x p), nu (scalar), theta
    sg_p     : sigma, alpha, beta (p x p), nu (scalar), theta
    """

    family: str
    params: dict
    certificate: ValidityCertificate | None = None
    override: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise KernelError(f"unknown family {self.family!r}; choose from {FAMILIES}")

    @property
    def p(self) -> int:
        f, P = self.family, self.params
        if f == "sg2":
            return 2
        if f == "composed":
            return None if P.get("sigma") is None else len(P["sigma"])
        if f == "mixture":
            return len(P["atoms"][0][1]) if P["atoms"] else None
        return len(P["sigma"])

    @property
    def evaluable(self) -> bool:
        return self.override or (self.certificate is not None and self.certificate.valid)

    def certified(self) -> "KernelSpec":
        return KernelSpec(self.family, self.params, certify(self), self.override)

    def to_json(self) -> dict:
        P = {k: _jsonable(v) for k, v in self.params.items()}
        out = {"family": self.family, **P}
        if self.override:
            out["override"] = True
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_json()
        return out

    @classmethod
    def from_json(cls, obj) -> "KernelSpec":
        if isinstance(obj, (str, bytes)):
            obj = json.loads(obj)
        obj = dict(obj)
        fam = obj.pop("family", None)
        if fam is None:
            raise KernelError("kernel JSON needs a 'family' field")
        override = bool(obj.pop("override", False))
        obj.pop("certificate", None)
        P = {}
        for k, v in obj.items():
            if k == "atoms":
                P[k] = [(float(x), np.asarray(F, dtype=float)) for x, F in v]
            elif isinstance(v, list):
                P[k] = np.asarray(v, dtype=float)
            else:
                P[k] = v
        return cls(fam, P, None, override)


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


# -- certifications -------------------------------------------------------------

def sg_normalizer(alpha, beta, nu):
    """A(alpha, beta, nu) = 2^(nu-1) (alpha beta)^(nu/2) / K_nu(sqrt(beta/alpha))."""
    z = np.sqrt(beta / alpha)
    return np.exp((nu - 1) * np.log(2.0) + 0.5 * nu * np.log(alpha * beta) - _log_kv(nu, z))


def sg2_bound_B(a, b, v):
    """Auxiliary factor B(a, b, v) of the full bivariate model, as stated."""
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        s = np.sqrt(a * b + v * v)
        base = (v - s) / (2.0 * b)
        return np.power(base, v) * np.exp((a * b + v * (-v - s)) / (-v + s))


def certify_sg2(params: dict) -> ValidityCertificate:
    """Parsimonious (case A) or full (case B) bivariate SG conditions."""
    P = params
    a1, a2, a12 = P["alpha1"], P["alpha2"], P["alpha12"]
    b1, b2, b12 = P["beta1"], P["beta2"], P["beta12"]
    v1, v2, v12 = P["nu1"], P["nu2"], P["nu12"]
    rho = abs(P["rho"])
    pos = Check("scales, sigmas positive",
                all(x > 0 for x in (a1, a2, a12, b1, b2, b12, P["sigma1"], P["sigma2"])),
                min(a1, a2, a12, b1, b2, b12, P["sigma1"], P["sigma2"]))
    theta = _theta_check(P.get("theta", 1.0))
    a_par = 0.5 * a1 * a2 / (a1 + a2)
    b_par = 0.5 * (b1 + b2)
    v_par = 0.5 * (v1 + v2)
    ratio = sg_normalizer(a1, b1, v1) * sg_normalizer(a2, b2, v2) / sg_normalizer(a12, b12, v12) ** 2
    eq = lambda x, y: abs(x - y) <= TOL.equality * max(1.0, abs(x), abs(y))
    if eq(a12, a_par) and eq(b12, b_par) and eq(v12, v_par):
        bound = float(np.sqrt(ratio))
        checks = (pos, theta,
                  Check("alpha12 = alpha1 alpha2 / (2 (alpha1 + alpha2))", True, 0.0),
                  Check("beta12 = (beta1 + beta2) / 2", True, 0.0),
                  Check("nu12 = (nu1 + nu2) / 2", True, 0.0),
                  Check("|rho| <= sqrt(A1 A2 / A12^2)", bool(rho <= bound), bound - rho))
        return ValidityCertificate("T4A", checks)
    Bv = sg2_bound_B(1 / a1 + 1 / a2 - 1 / (2 * a12), b1 + b2 - 2 * b12, v1 + v2 - 2 * v12)
    bound = float(np.sqrt(ratio * Bv)) if np.isfinite(Bv) and Bv >= 0 else float("nan")
    checks = (pos, theta,
              Check("alpha12 < alpha1 alpha2 / (2 (alpha1 + alpha2))", bool(a12 < a_par), a_par - a12),
              Check("beta12 > (beta1 + beta2) / 2", bool(b12 > b_par), b12 - b_par),
              Check("nu12 != (nu1 + nu2) / 2", bool(v12 != v_par), abs(v12 - v_par)),
              Check("|rho| <= sqrt(A1 A2 B / A12^2)", bool(np.isfinite(bound) and rho <= bound),
                    bound - rho if np.isfinite(bound) else float("nan"),
                    "" if np.isfinite(bound) else "bound factor undefined for these arguments"))
    return ValidityCertificate("T4B", checks)


def _theta_check(theta) -> Check:
    return Check("theta in (0, 1]", bool(0 < theta <= 1), min(theta, 1 - theta))


def _matrices(P, names):
    out = []
    for n in names:
        M = np.atleast_2d(np.asarray(P[n], dtype=float))
        if M.shape[0] != M.shape[1]:
            raise KernelError(f"{n} must be square")
        out.append(M)
    shapes = {M.shape for M in out}
    if len(shapes) != 1:
        raise KernelError(f"parameter matrices {names} differ in shape")
    return out


def _symmetric_check(mats, names) -> Check:
    asym = max(float(np.max(np.abs(M - M.T))) for M in mats)
    return Check(f"{', '.join(names)} symmetric", asym <= TOL.sym, -asym)


def _positive(name, M) -> Check:
    return Check(f"{name} entries positive", bool(np.all(M > 0)), float(np.min(M)))


def matern_mixing_log_density(xi, sigma_abs, alpha, nu):
    """log of |sigma| R(xi), where M(t) = int exp(-t xi) R(xi) dxi."""
    return (np.log(sigma_abs) - sp.gammaln(nu) - nu * np.log(4 * alpha)
            - (nu + 1) * np.log(xi) - 1.0 / (4 * alpha * xi))


def _sampled_mixture_check(logf, sign, grid) -> Check:
    """Min eigenvalue over ``grid`` of the diagonally normalised density matrix."""
    worst = np.inf
    at = None
    for xi in grid:
        L = logf(xi)
        d = np.diag(L)
        N = sign * np.exp(np.minimum(L - 0.5 * (d[:, None] + d[None, :]), 300.0))
        w = float(np.linalg.eigvalsh(N)[0])
        if w < worst:
            worst, at = w, xi
    tol = TOL.psd * 10
    return Check("mixing density positive semidefinite on a log grid", worst >= -tol, worst,
                 f"worst at xi={at:.3g}")


MIXING_GRID = np.logspace(-10, 10, 801)


def certify_matern_p(params: dict) -> ValidityCertificate:
    """Conditions A or B for the multivariate Matern, plus a mixing-density check.

    The stated matrix conditions alone admit non-PSD kernels (for instance
    constant nu, sigma = ones and unequal alpha), so a certificate also
    requires the Gaussian-scale-mixture density matrix to be PSD on a
    log-spaced grid of scales; such certificates are flagged ``sampled``.
    """
    sigma, alpha, nu = _matrices(params, ["sigma", "alpha", "nu"])
    base = [_symmetric_check([sigma, alpha, nu], ["sigma", "alpha", "nu"]),
            _positive("alpha", alpha), _positive("nu", nu), _theta_check(params.get("theta", 1.0))]
    if not all(c.passed for c in base[:3]):
        return ValidityCertificate("none", tuple(base))
    mix = _sampled_mixture_check(
        lambda xi: matern_mixing_log_density(xi, np.abs(sigma) + 1e-300, alpha, nu),
        np.sign(sigma), MIXING_GRID)
    condA = [_cnd("[nu]", nu), _cnd("[nu alpha]", nu * alpha),
             _psd("[sigma nu^nu exp(-nu) / Gamma(nu)]",
                  sigma * np.exp(nu * np.log(nu) - nu - sp.gammaln(nu)))]
    if all(c.passed for c in condA):
        return ValidityCertificate("T5A", tuple(base + condA + [mix]), sampled=True)
    beta = params.get("beta")
    if beta is None:
        beta = _search_matern_beta(sigma, alpha, nu)
    beta = float(beta)
    condB = [Check("beta > 0", beta > 0, beta),
             _cnd("[nu]", nu), _cnd(f"[1/alpha - beta nu] (beta={beta:.6g})", 1.0 / alpha - beta * nu),
             _psd("[sigma (beta alpha)^(-nu) exp(-nu)]",
                  sigma * np.exp(-nu * np.log(beta * alpha) - nu))]
    theorem = "T5B" if all(c.passed for c in condB) else "none"
    if theorem == "none" and not any(c.passed for c in condB[2:3]):
        # report case A failures too, so the user sees why neither applies
        condB = condA + condB
    return ValidityCertificate(theorem, tuple(base + condB + [mix]), sampled=True)


def _search_matern_beta(sigma, alpha, nu):
    best, best_m = 1.0, -np.inf
    for b in np.logspace(-4, 4, 161):
        m1 = cnd_check(1.0 / alpha - b * nu).min_eig
        M = sigma * np.exp(-nu * np.log(b * alpha) - nu)
        if not np.all(np.isfinite(M)):
            continue
        d = np.sqrt(np.abs(np.diag(M)))
        m2 = np.linalg.eigvalsh(M / np.outer(d, d))[0] if np.all(d > 0) else -np.inf
        m = min(m1, m2)
        if m > best_m:
            best, best_m = b, m
    return best


def certify_cauchy_p(params: dict) -> ValidityCertificate:
    sigma, beta = _matrices(params, ["sigma", "beta"])
    nu = float(params["nu"])
    checks = [_symmetric_check([sigma, beta], ["sigma", "beta"]), _positive("beta", beta),
              Check("nu > 0", nu > 0, nu), _theta_check(params.get("theta", 1.0))]
    if all(c.passed for c in checks[:3]):
        checks += [_cnd("[beta]", beta), _psd("[sigma beta^nu]", sigma * beta ** nu)]
    return ValidityCertificate("T6", tuple(checks))


def certify_sg_p(params: dict) -> ValidityCertificate:
    """Multivariate SG with common nu.

    The PSD condition uses the Laplace-mixture normaliser
    (alpha beta)^(nu/2) / K_nu(sqrt(beta/alpha)).
    """
    sigma, alpha, beta = _matrices(params, ["sigma", "alpha", "beta"])
    nu = float(params["nu"])
    checks = [_symmetric_check([sigma, alpha, beta], ["sigma", "alpha", "beta"]),
              _positive("alpha", alpha), _positive("beta", beta),
              _theta_check(params.get("theta", 1.0))]
    if all(c.passed for c in checks[:3]):
        with np.errstate(over="ignore", invalid="ignore"):
            scale = np.exp(0.5 * nu * np.log(alpha * beta) - _log_kv(nu, np.sqrt(beta / alpha)))
        checks += [_cnd("[1/alpha]", 1.0 / alpha), _cnd("[beta]", beta),
                   _psd("[sigma (alpha beta)^(nu/2) / K_nu(sqrt(beta/alpha))]", sigma * scale)]
    return ValidityCertificate("T7", tuple(checks))


def certify_composed(params: dict) -> ValidityCertificate:
    psi, g = params["psi"], params["g"]
    checks = [Check("psi in completely monotone catalog", psi in CM_CATALOG, 0.0, psi),
              Check("g in Bernstein catalog", g in BERNSTEIN_CATALOG, 0.0, g),
              Check("xi > 0", params.get("xi", 1.0) > 0, params.get("xi", 1.0))]
    gp = params.get("g_params") or {}
    if g == "power":
        checks.append(_theta_check(gp.get("theta", 1.0)))
    if params.get("sigma") is not None:
        checks.append(_psd("[sigma]", np.asarray(params["sigma"], dtype=float)))
    return ValidityCertificate("T2", tuple(checks))


def certify_mixture(params: dict) -> ValidityCertificate:
    checks = [_theta_check(params.get("theta", 1.0))]
    for k, (xi, F) in enumerate(params["atoms"]):
        checks.append(Check(f"atom {k}: xi >= 0", xi >= 0, xi))
        checks.append(_psd(f"atom {k}: F", F))
    return ValidityCertificate("T3", tuple(checks))


def certify(spec: KernelSpec) -> ValidityCertificate:
    P = spec.params
    try:
        return {"composed": certify_composed, "mixture": certify_mixture, "sg2": certify_sg2,
                "matern_p": certify_matern_p, "cauchy_p": certify_cauchy_p,
                "sg_p": certify_sg_p}[spec.family](P)
    except KeyError as exc:
        raise KernelError(f"{spec.family}: missing parameter {exc}") from None


# -- evaluation ---------------------------------------------------------------------

def compose_kernel(psi, g, D, xi: float = 1.0, psi_params=None, g_params=None,
                   override: bool = False) -> np.ndarray:
    """Elementwise psi(xi * g(D)).

    ``psi``/``g`` are catalog names, or callables when ``override`` is set
    (the caller then vouches for complete monotonicity / the Bernstein property).
    """
    psi_f = _lookup(psi, CM_CATALOG, "completely monotone", override)
    g_f = _lookup(g, BERNSTEIN_CATALOG, "Bernstein", override)
    Dm = D.matrix() if isinstance(D, MultiMetricValue) else np.asarray(D, dtype=float)
    return psi_f(xi * g_f(Dm, **(g_params or {})), **(psi_params or {}))


def _lookup(f, catalog, kind, override):
    if callable(f):
        if not override:
            raise KernelError(f"custom {kind} function requires override=True")
        return f
    if f not in catalog:
        raise KernelError(f"{f!r} is not in the {kind} catalog {sorted(catalog)}")
    return catalog[f]


def mixture_kernel(atoms: Sequence, theta: float, D) -> np.ndarray:
    """sum_k F_k * exp(-xi_k D^theta) (elementwise products)."""
    Dm = D.matrix() if isinstance(D, MultiMetricValue) else np.asarray(D, dtype=float)
    out = np.zeros_like(Dm)
    for xi, F in atoms:
        F = np.asarray(F, dtype=float)
        if not psd_check(F).passed:
            raise KernelError("mixture atom matrix is not positive semidefinite")
        out = out + F * np.exp(-xi * _power(Dm, theta))
    return out


def _entry_function(spec: KernelSpec, i: int, j: int) -> Callable:
    """Scalar function of the metric value for entry (i, j), scale included."""
    f, P = spec.family, spec.params
    th = P.get("theta", 1.0)
    if f == "composed":
        s = 1.0 if P.get("sigma") is None else float(np.asarray(P["sigma"])[i, j])
        return lambda d: s * compose_kernel(P["psi"], P["g"], d, P.get("xi", 1.0),
                                            P.get("psi_params"), P.get("g_params"), spec.override)
    if f == "mixture":
        return lambda d: sum(float(np.asarray(F)[i, j]) * np.exp(-xi * _power(d, th))
                             for xi, F in P["atoms"])
    if f == "sg2":
        if i == j:
            s, k = (P["sigma1"], "1") if i == 0 else (P["sigma2"], "2")
            return lambda d: s * s * sg_scalar(_power(d, th), P["alpha" + k], P["beta" + k], P["nu" + k])
        c = P["sigma1"] * P["sigma2"] * P["rho"]
        return lambda d: c * sg_scalar(_power(d, th), P["alpha12"], P["beta12"], P["nu12"])
    S = np.asarray(P["sigma"], dtype=float)
    if f == "matern_p":
        a, v = np.asarray(P["alpha"])[i, j], np.asarray(P["nu"])[i, j]
        return lambda d: S[i, j] * matern_scalar(_power(d, th), a, v)
    if f == "cauchy_p":
        b = np.asarray(P["beta"])[i, j]
        return lambda d: S[i, j] * cauchy_scalar(_power(d, th), b, P["nu"])
    if f == "sg_p":
        a, b = np.asarray(P["alpha"])[i, j], np.asarray(P["beta"])[i, j]
        return lambda d: S[i, j] * sg_scalar(_power(d, th), a, b, P["nu"])
    raise KernelError(f"unknown family {f!r}")


def _require(spec: KernelSpec, m: FieldModel):
    if not spec.evaluable:
        raise KernelError(f"{spec.family} spec is not certified valid; certify it or set override")
    if spec.p is not None and spec.p != m.p:
        raise KernelError(f"kernel has p={spec.p} but the field model has p={m.p}")


def kernel_blocks(spec: KernelSpec, m: FieldModel, Ddiag, Doff) -> np.ndarray:
    """Point-major covariance from precomputed metric values."""
    _require(spec, m)
    p = m.p
    Na, Nb = Ddiag.shape
    K = np.empty((Na, p, Nb, p))
    for i in range(p):
        for j in range(i, p):
            f = _entry_function(spec, i, j)
            vals = f(Ddiag if i == j else Doff)
            K[:, i, :, j] = vals
            if i != j:
                K[:, j, :, i] = vals
    return K.reshape(Na * p, Nb * p)


def eval_multivariate_kernel(spec: KernelSpec, m: FieldModel, u1, u2) -> np.ndarray:
    """p x p kernel value at a pair of points."""
    d, o = distance_blocks(m, [u1], [u2])
    return kernel_blocks(spec, m, d, o)


def kernel_cov(spec: KernelSpec, m: FieldModel, points, points_b=None) -> np.ndarray:
    """Np x Np (point-major) covariance of a kernel over points."""
    d, o = distance_blocks(m, points, points_b)
    K = kernel_blocks(spec, m, d, o)
    if points_b is None:
        K = 0.5 * (K + K.T)
    return K


def load_kernel(path) -> KernelSpec:
    with open(path) as fh:
        return KernelSpec.from_json(fh.read())
