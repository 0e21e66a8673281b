"""Kernels of the l1 distance for Euclidean trees.

A tree with m leaves embeds isometrically in (R^m', l1) with m' = ceil(m/2),
so a matrix function K(t) that is positive semidefinite for l1 distances in
R^m' is a valid covariance of the tree geodesic distance.  This module ships

* the omega kernels (the l1 analogue of the "uniform on the sphere" kernel),
  with closed forms for orders 2 and 3, a power series and a quadrature for
  any real order > 1,
* the normalised tail-integral operator ``I`` and its iterates, which map
  Euclidean-distance kernels in dimension 2m'-1 into the l1 class,
* the compactly supported Askey-type families obtained that way,
* scale mixtures and the omega-based multivariate construction.

Convention: si(t) = Si(t) - pi/2 with Si(t) = int_0^t sin(u)/u du, which
makes omega_2(0) = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy import special as sp

from .config import TOL
from .graph import GraphEE, Point
from .kernels import Check, ValidityCertificate
from .psd import psd_check


class TreeKernelError(ValueError):
    pass


def mprime(m: int) -> int:
    return -(-int(m) // 2)


def manhattan(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise TreeKernelError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(np.sum(np.abs(x - y)))


def si(t):
    """Shifted sine integral Si(t) - pi/2."""
    return sp.sici(t)[0] - 0.5 * np.pi


# -- omega kernels ---------------------------------------------------------

def omega_closed(order: int, t):
    """Closed forms for orders 2 and 3."""
    t = np.asarray(t, dtype=float)
    out = np.ones_like(t)
    pos = t > 0
    tp = t[pos]
    if order == 2:
        out[pos] = -2.0 / np.pi * si(tp)
    elif order == 3:
        out[pos] = 0.5 * (np.sin(tp) / tp + np.cos(tp) + tp * si(tp))
    else:
        raise TreeKernelError(f"no closed form for order {order}")
    return out


SERIES_LIMIT = 10.0


def omega_series(order: float, t, terms: int = 160):
    """Power series of omega for real order > 1, accurate for t <= 10.

    omega(t) = Gamma(o/2)^2 sum_k (-t)^k / (k! Gamma((o+k)/2) Gamma((o-k)/2)),
    where 1/Gamma vanishes at its poles, which truncates the even or odd part
    for integer orders.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    k = np.arange(terms)
    logc = 2 * sp.gammaln(order / 2) - sp.gammaln(k + 1) - sp.gammaln((order + k) / 2)
    rg = sp.rgamma((order - k) / 2)
    out = np.empty_like(t)
    for n, tv in enumerate(t):
        if tv == 0.0:
            out[n] = 1.0
            continue
        terms_k = np.exp(logc + k * np.log(tv)) * rg * (-1.0) ** k
        out[n] = terms_k.sum()
    return out


def _hankel_PQ(nu, z, K=8):
    """Hankel asymptotic P, Q of J_nu; finite and exact for half-integer nu."""
    m4 = 4.0 * nu * nu
    P = 0.0
    Q = 0.0
    a = 1.0
    for k in range(0, 2 * K):
        if k > 0:
            a *= (m4 - (2 * k - 1) ** 2) / (k * 8.0)
        term = a / z ** k
        if k % 2 == 0:
            P += (-1) ** (k // 2) * term
        else:
            Q += (-1) ** (k // 2) * term
    return P, Q


def Omega(order: float, x):
    """Characteristic function of the uniform law on the unit sphere of R^order."""
    x = np.asarray(x, dtype=float)
    nu = (order - 2) / 2
    out = np.ones_like(x)
    pos = x > 1e-8
    xp = x[pos]
    out[pos] = math.gamma(order / 2) * (2.0 / xp) ** nu * sp.jv(nu, xp)
    return out


def omega_quad(order: float, t: float) -> float:
    """Omega kernel by direct quadrature of its radial integral.

    The integrand 2c Omega(r t) r^(1-o) (r^2-1)^((o-3)/2) on r > 1 is split into
    an algebraically weighted piece near r = 1, geometric panels up to a radius
    where the Hankel expansion is accurate, and Fourier-weighted tails.
    """
    if order <= 1:
        raise TreeKernelError(f"omega order must exceed 1, got {order}")
    t = float(t)
    if t == 0.0:
        return 1.0
    mu = float(order)
    nu = (mu - 2) / 2
    c = math.gamma(mu / 2) / (math.sqrt(math.pi) * math.gamma((mu - 1) / 2))
    g_mu = math.gamma(mu / 2)

    def Om(x):
        return g_mu * (2 / x) ** nu * sp.jv(nu, x) if x > 1e-8 else 1.0

    a = (mu - 3) / 2
    z0 = max(80.0, 4 * nu * nu + 20)
    R = max(2.0, z0 / t)
    f = lambda r: 2 * c * Om(r * t) * r ** (1 - mu) * (r + 1) ** a
    errs = []
    val, e = integrate.quad(f, 1, 2, weight="alg", wvar=(a, 0), limit=200,
                            epsabs=1e-13, epsrel=1e-12)
    errs.append(e)
    g = lambda r: f(r) * (r - 1) ** a
    lo = 2.0
    while lo < R:
        hi = min(R, 2 * lo) if R / lo > 2.5 else R
        v, e = integrate.quad(g, lo, hi, limit=500, epsabs=1e-14, epsrel=1e-12)
        val += v
        errs.append(e)
        lo = hi
    phi = (nu / 2 + 0.25) * math.pi

    def amp(r):
        return (2 * c * g_mu * 2 ** nu * (r * t) ** (-nu) * r ** (1 - mu)
                * (r * r - 1) ** a * math.sqrt(2 / (math.pi * r * t)))

    def fc(r):
        P, Q = _hankel_PQ(nu, r * t)
        return amp(r) * (P * math.cos(phi) + Q * math.sin(phi))

    def fs(r):
        P, Q = _hankel_PQ(nu, r * t)
        return amp(r) * (P * math.sin(phi) - Q * math.cos(phi))

    v2, e2 = integrate.quad(fc, R, np.inf, weight="cos", wvar=t, epsabs=1e-13, limlst=200)
    v3, e3 = integrate.quad(fs, R, np.inf, weight="sin", wvar=t, epsabs=1e-13, limlst=200)
    err = sum(errs) + e2 + e3
    if not np.isfinite(val + v2 + v3) or err > 1e-6:
        raise TreeKernelError(f"omega quadrature did not converge: order={order}, t={t}, "
                              f"error estimate {err:.3g}")
    return val + v2 + v3


@lru_cache(maxsize=200_000)
def _omega_cached(order: float, t: float) -> float:
    if t <= SERIES_LIMIT:
        return float(omega_series(order, t)[0])
    return omega_quad(order, t)


def omega_eval(order: float, t, method: str = "auto"):
    """Omega kernel of real ``order`` > 1 at ``t`` >= 0 (vectorised).

    ``method``: "auto" (closed form for 2 and 3, otherwise series for t <= 10
    and quadrature beyond), "closed", "series" or "quad".
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise TreeKernelError("omega evaluated at negative argument")
    if method == "closed" or (method == "auto" and order in (2, 3)):
        return omega_closed(int(order), t)
    if method == "series":
        return omega_series(order, t.ravel()).reshape(t.shape)
    if method == "quad":
        return np.array([omega_quad(order, v) for v in t.ravel()]).reshape(t.shape)
    if method != "auto":
        raise TreeKernelError(f"unknown omega method {method!r}")
    flat = t.ravel()
    uniq, inv = np.unique(flat, return_inverse=True)
    vals = np.array([_omega_cached(float(order), float(u)) for u in uniq])
    return vals[inv].reshape(t.shape)


@dataclass(frozen=True)
class OmegaKernel:
    order: float

    @property
    def method(self) -> str:
        return "closed-form" if self.order in (2, 3) else "quadrature"

    def __call__(self, t):
        return omega_eval(self.order, t)


# -- the operator I ---------------------------------------------------------

@dataclass(frozen=True)
class OscillatoryTail:
    """f(u) = amp_cos(u) cos(freq u) + amp_sin(u) sin(freq u) for u >= start."""

    amp_cos: Callable
    amp_sin: Callable
    start: float
    freq: float = 1.0


def _integral(fun, a, b, tail: OscillatoryTail | None):
    """int_a^b fun, b possibly inf, using Fourier weights beyond tail.start."""
    total = 0.0
    err = 0.0
    if tail is not None and np.isinf(b):
        split = max(a, tail.start)
        if split > a:
            v, e = integrate.quad(fun, a, split, limit=500, epsabs=1e-13, epsrel=1e-11)
            total += v
            err += e
        for amp, w in ((tail.amp_cos, "cos"), (tail.amp_sin, "sin")):
            v, e = integrate.quad(amp, split, np.inf, weight=w, wvar=tail.freq,
                                  epsabs=1e-14, limlst=200)
            total += v
            err += e
        return total, err
    v, e = integrate.quad(fun, a, b, limit=500, epsabs=1e-14, epsrel=1e-12)
    return v, e


def iterate_I(f: Callable, iterations: int, support: float | None = None,
              horizon: float = 1e4, tail: OscillatoryTail | None = None) -> Callable:
    """The ``iterations``-fold normalised tail integral of ``f``.

    Uses the Cauchy formula for repeated integration,

        (I^k f)(t) = int_t^inf (u - t)^(k-1) f(u) du / int_0^inf u^(k-1) f(u) du,

    so the result equals 1 at t = 0.  ``support`` bounds the integration for
    compactly supported ``f``; otherwise ``f`` must be negligible beyond
    ``horizon`` unless an :class:`OscillatoryTail` describes it.
    """
    k = int(iterations)
    if k < 0:
        raise TreeKernelError("iterations must be >= 0")
    if k == 0:
        f0 = float(f(0.0))
        return lambda t: np.vectorize(lambda s: float(f(s)) / f0)(np.asarray(t, dtype=float))
    upper = float(support) if support is not None else (np.inf if tail is not None else horizon)
    if support is None and tail is None:
        probe = abs(float(f(horizon))) * horizon ** k
        ref = abs(float(f(0.0))) + 1e-300
        if probe > 1e-10 * ref:
            raise TreeKernelError(f"tail of f does not vanish by horizon {horizon}: "
                                  f"|f(H)| H^k = {probe:.3g}")

    def moment(t):
        w = (lambda u: (u - t) ** (k - 1) * f(u)) if k > 1 else f
        tl = None
        if tail is not None:
            p = (lambda g: (lambda u: (u - t) ** (k - 1) * g(u))) if k > 1 else (lambda g: g)
            tl = OscillatoryTail(p(tail.amp_cos), p(tail.amp_sin), tail.start, tail.freq)
        return _integral(w, t, upper, tl)

    norm, _ = moment(0.0)
    if not np.isfinite(norm) or norm == 0.0:
        raise TreeKernelError("normalising integral of f is zero or divergent")

    def If(t):
        t = np.asarray(t, dtype=float)
        flat = [0.0 if v >= upper else moment(float(v))[0] / norm for v in t.ravel()]
        return np.array(flat).reshape(t.shape)

    return If


def omega_sphere_tail(order: int, start: float = 30.0) -> OscillatoryTail:
    """Exact cos/sin decomposition of Omega for odd ``order`` (half-integer Bessel)."""
    if order % 2 != 1:
        raise TreeKernelError("exact Hankel tails need an odd order")
    nu = (order - 2) / 2
    K = int(abs(nu)) + 2
    g = math.gamma(order / 2) * 2 ** nu
    phi = (nu / 2 + 0.25) * math.pi

    def amp_c(u):
        P, Q = _hankel_PQ(nu, u, K)
        return g * u ** (-nu) * math.sqrt(2 / (math.pi * u)) * (P * math.cos(phi) + Q * math.sin(phi))

    def amp_s(u):
        P, Q = _hankel_PQ(nu, u, K)
        return g * u ** (-nu) * math.sqrt(2 / (math.pi * u)) * (P * math.sin(phi) - Q * math.cos(phi))

    return OscillatoryTail(amp_c, amp_s, start)


# -- Askey-type families ----------------------------------------------------

def _askey_restriction(family: int, nu: float, mp: int):
    need = mp if family == 1 else mp + 1
    if family not in (1, 2):
        raise TreeKernelError(f"Askey family must be 1 or 2, got {family}")
    return nu >= need, need


def askey_psi(family: int, nu: float, t):
    """Euclidean-class member before the tail integrals."""
    t = np.asarray(t, dtype=float)
    base = np.power(np.clip(1.0 - t, 0.0, None), nu)
    return base if family == 1 else base * (1.0 + nu * t)


def askey_phi(family: int, nu: float, mp: int, t):
    """l1-class member: (1-t)_+^(nu+m'-1) or (1/m')(1-t)_+^(nu+m'-1)(m' + nu t).

    Exactly zero for t >= 1.
    """
    ok, need = _askey_restriction(family, nu, mp)
    if not ok:
        raise TreeKernelError(f"Askey family {family} needs nu >= {need} for m'={mp}, got {nu}")
    t = np.asarray(t, dtype=float)
    base = np.where(t < 1.0, np.power(np.clip(1.0 - t, 0.0, None), nu + mp - 1), 0.0)
    if family == 1:
        return base
    return base * (mp + nu * t) / mp


def tree_mixture_kernel(atoms: Sequence, phi: Callable, t) -> np.ndarray:
    """sum_k F_k phi(r_k t); ``atoms`` = [(r_k > 0, F_k PSD), ...]."""
    t = float(t)
    out = None
    for r, F in atoms:
        F = np.asarray(F, dtype=float)
        if r <= 0:
            raise TreeKernelError(f"mixture scale must be positive, got {r}")
        if not psd_check(F).passed:
            raise TreeKernelError("mixture atom matrix is not positive semidefinite")
        term = F * float(phi(r * t))
        out = term if out is None else out + term
    if out is None:
        raise TreeKernelError("empty mixture")
    return out


# -- omega-based multivariate construction -----------------------------------

def A_matrix(rho, b, nu, mp: int, r: float) -> np.ndarray:
    """Entrywise Gamma-ratio times (1 - b^2 r^2)_+^(nu/2 - m' - 1/2)."""
    rho = np.asarray(rho, dtype=float)
    b = np.asarray(b, dtype=float)
    nu = np.asarray(nu, dtype=float)
    logc = sp.gammaln(nu / 2) - sp.gammaln(nu / 2 - mp + 0.5) - sp.gammaln(mp - 0.5)
    base = 1.0 - b * b * r * r
    expo = nu / 2 - mp - 0.5
    with np.errstate(invalid="ignore", divide="ignore"):
        trunc = np.where(base > 0, np.power(np.where(base > 0, base, 1.0), expo), 0.0)
    return rho * np.exp(logc) * trunc


def omega_multivariate(rho, b, nu, mp: int, x) -> np.ndarray:
    """K_ij(x) = rho_ij / b_ij^(2m'-1) omega_{nu_ij}(x / b_ij)."""
    rho = np.asarray(rho, dtype=float)
    b = np.asarray(b, dtype=float)
    nu = np.asarray(nu, dtype=float)
    p = rho.shape[0]
    K = np.empty((p, p))
    for i in range(p):
        for j in range(p):
            K[i, j] = rho[i, j] / b[i, j] ** (2 * mp - 1) * float(omega_eval(nu[i, j], x / b[i, j]))
    return K


# -- specs ---------------------------------------------------------------------

TREE_FAMILIES = ("askey1", "askey2", "omega_direct", "mixture")


@dataclass
class TreeKernelSpec:
    """A kernel of the tree distance valid on trees with at most ``m`` leaves.

    ``params`` per family:

    askey1/askey2 : nu (scalar), rho (p x p), b (p x p scales)
                    -> K_ij(t) = rho_ij phi_nu(t / b_ij)
    omega_direct  : rho, b, nu (p x p) -> rho_ij / b_ij^(2m'-1) omega_{nu_ij}(t / b_ij)
    mixture       : atoms [(r_k, F_k)], base_family (1|2), nu
                    -> sum_k F_k phi_nu(r_k t)
    """

    family: str
    m: int
    params: dict
    certificate: ValidityCertificate | None = None
    override: bool = False

    def __post_init__(self):
        if self.family not in TREE_FAMILIES:
            raise TreeKernelError(f"unknown tree family {self.family!r}; choose from {TREE_FAMILIES}")
        if int(self.m) < 1:
            raise TreeKernelError("m (number of leaves) must be >= 1")

    @property
    def mprime(self) -> int:
        return mprime(self.m)

    @property
    def p(self) -> int:
        if self.family == "mixture":
            return len(self.params["atoms"][0][1])
        return np.atleast_2d(self.params["rho"]).shape[0]

    @property
    def evaluable(self) -> bool:
        return self.override or (self.certificate is not None and self.certificate.valid)

    def accepts(self, leaves: int) -> bool:
        """True iff the spec is valid and usable on trees with ``leaves`` leaves."""
        return self.evaluable and int(leaves) <= int(self.m)

    def certified(self) -> "TreeKernelSpec":
        return TreeKernelSpec(self.family, self.m, self.params, certify_tree(self), self.override)

    def __call__(self, t) -> np.ndarray:
        """p x p value at scalar distance ``t``."""
        if not self.evaluable:
            raise TreeKernelError("tree kernel spec is not certified valid")
        return _tree_value(self, float(t))

    def matrix_function(self, T) -> np.ndarray:
        """Values at an array of distances, shape T.shape + (p, p)."""
        if not self.evaluable:
            raise TreeKernelError("tree kernel spec is not certified valid")
        return _tree_values(self, np.asarray(T, dtype=float))

    def to_json(self) -> dict:
        P = {}
        for k, v in self.params.items():
            if k == "atoms":
                P[k] = [[float(r), np.asarray(F).tolist()] for r, F in v]
            elif isinstance(v, np.ndarray):
                P[k] = v.tolist()
            else:
                P[k] = v
        out = {"family": self.family, "m": int(self.m), **P}
        if self.override:
            out["override"] = True
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_json()
        return out

    @classmethod
    def from_json(cls, obj) -> "TreeKernelSpec":
        import json

        if isinstance(obj, (str, bytes)):
            obj = json.loads(obj)
        obj = dict(obj)
        fam = obj.pop("family", None)
        if fam is None:
            raise TreeKernelError("tree kernel JSON needs a 'family' field")
        if "m" not in obj:
            raise TreeKernelError("tree kernel JSON needs 'm' (number of leaves)")
        m = int(obj.pop("m"))
        override = bool(obj.pop("override", False))
        obj.pop("certificate", None)
        P = {}
        for k, v in obj.items():
            if k == "atoms":
                P[k] = [(float(r), np.asarray(F, dtype=float)) for r, F in v]
            elif isinstance(v, list):
                P[k] = np.asarray(v, dtype=float)
            else:
                P[k] = v
        return cls(fam, m, P, None, override)


def _entry_scalar(spec: TreeKernelSpec, i: int, j: int) -> Callable:
    P, mp = spec.params, spec.mprime
    if spec.family in ("askey1", "askey2"):
        fam = 1 if spec.family == "askey1" else 2
        rho = float(np.atleast_2d(P["rho"])[i, j])
        b = float(np.atleast_2d(P["b"])[i, j])
        nu = float(P["nu"])
        return lambda T: rho * askey_phi(fam, nu, mp, T / b)
    if spec.family == "omega_direct":
        rho = float(np.atleast_2d(P["rho"])[i, j])
        b = float(np.atleast_2d(P["b"])[i, j])
        nu = float(np.atleast_2d(P["nu"])[i, j])
        return lambda T: rho / b ** (2 * mp - 1) * omega_eval(nu, T / b)
    if spec.family == "mixture":
        fam, nu = int(P.get("base_family", 1)), float(P["nu"])
        atoms = [(float(r), float(np.asarray(F)[i, j])) for r, F in P["atoms"]]
        return lambda T: sum(f * askey_phi(fam, nu, mp, r * T) for r, f in atoms)
    raise TreeKernelError(f"unknown tree family {spec.family!r}")


def _tree_values(spec: TreeKernelSpec, T: np.ndarray) -> np.ndarray:
    p = spec.p
    out = np.empty(T.shape + (p, p))
    for i in range(p):
        for j in range(i, p):
            v = _entry_scalar(spec, i, j)(T)
            out[..., i, j] = v
            out[..., j, i] = v
    return out


def _tree_value(spec: TreeKernelSpec, t: float) -> np.ndarray:
    return _tree_values(spec, np.array(t))


# -- certification ----------------------------------------------------------------

R_GRID_SIZE = 64


def certify_tree(spec: TreeKernelSpec, l1_points: int = 40, seed: int = 0) -> ValidityCertificate:
    """Validity checks for a tree kernel spec on trees with up to ``spec.m`` leaves.

    * Askey families: the parameter restriction on nu, [rho] PSD and
      symmetric inputs.  Equal scales make the kernel rho * phi, which is then
      valid exactly; unequal scales add a sampled l1 check in R^m' and the
      certificate is flagged ``sampled``.
    * omega_direct: b > 0, nu > 2m'-1 and A(r) PSD on an r-grid up to the
      support bound 1/min(b); flagged ``sampled``.
    * mixture: restriction on the base function and PSD atoms.
    """
    P, mp, fam = spec.params, spec.mprime, spec.family
    checks = []
    sampled = False
    if fam in ("askey1", "askey2"):
        f = 1 if fam == "askey1" else 2
        nu = float(P["nu"])
        ok, need = _askey_restriction(f, nu, mp)
        rho = np.atleast_2d(np.asarray(P["rho"], dtype=float))
        b = np.atleast_2d(np.asarray(P["b"], dtype=float))
        checks.append(Check(f"nu >= {need}", ok, nu - need))
        checks.append(Check("rho, b symmetric", _sym_ok(rho) and _sym_ok(b), 0.0))
        checks.append(Check("b entries positive", bool(np.all(b > 0)), float(np.min(b))))
        v = psd_check(rho)
        checks.append(Check("[rho] positive semidefinite", v.passed, v.min_eig))
        if ok and np.all(b > 0) and np.ptp(b) > 0:
            sampled = True
            checks.append(_l1_sampled_check(spec, mp, l1_points, seed))
        return ValidityCertificate("T3", tuple(checks), sampled)
    if fam == "omega_direct":
        rho, b, nu = (np.atleast_2d(np.asarray(P[k], dtype=float)) for k in ("rho", "b", "nu"))
        checks.append(Check("rho, b, nu symmetric", _sym_ok(rho) and _sym_ok(b) and _sym_ok(nu), 0.0))
        checks.append(Check("b entries positive", bool(np.all(b > 0)), float(np.min(b))))
        checks.append(Check(f"nu entries > {2 * mp - 1}", bool(np.all(nu > 2 * mp - 1)),
                            float(np.min(nu) - (2 * mp - 1))))
        if all(c.passed for c in checks):
            rmax = 1.0 / float(np.min(b))
            grid = np.unique(np.concatenate([
                np.linspace(0.0, rmax, R_GRID_SIZE + 1)[1:],
                1.0 / np.unique(b) * (1 - 1e-9)]))
            worst, at = np.inf, None
            for r in grid:
                w = psd_check(A_matrix(rho, b, nu, mp, r), tol=0.0).min_eig
                if w < worst:
                    worst, at = w, r
            tol = TOL.psd * (1 + float(np.max(np.abs(A_matrix(rho, b, nu, mp, grid[0])))))
            checks.append(Check("A(r) positive semidefinite on r-grid", worst >= -tol, worst,
                                f"{len(grid)} grid points, worst r={at:.4g}; A(r)=0 for r>={rmax:.4g}"))
        return ValidityCertificate("T3", tuple(checks), sampled=True)
    if fam == "mixture":
        f = int(P.get("base_family", 1))
        nu = float(P["nu"])
        ok, need = _askey_restriction(f, nu, mp)
        checks.append(Check(f"nu >= {need}", ok, nu - need))
        for k, (r, F) in enumerate(P["atoms"]):
            v = psd_check(np.asarray(F, dtype=float))
            checks.append(Check(f"atom {k}: r > 0", r > 0, r))
            checks.append(Check(f"atom {k}: F positive semidefinite", v.passed, v.min_eig))
        return ValidityCertificate("T3", tuple(checks))
    raise TreeKernelError(f"unknown tree family {fam!r}")


def _sym_ok(M) -> bool:
    return float(np.max(np.abs(M - M.T))) <= TOL.sym


def _l1_sampled_check(spec, mp, npts, seed) -> Check:
    """Min eigenvalue over random l1 point clouds in R^m' at several spreads."""
    rng = np.random.default_rng(seed)
    b = np.atleast_2d(np.asarray(spec.params["b"], dtype=float))
    worst = np.inf
    probe = TreeKernelSpec(spec.family, spec.m, spec.params, None, override=True)
    for spread in (0.25, 1.0, 4.0):
        X = rng.uniform(0, spread * float(np.max(b)), size=(npts, mp))
        T = np.abs(X[:, None, :] - X[None, :, :]).sum(-1)
        K = probe.matrix_function(T)  # (N, N, p, p)
        p = K.shape[-1]
        M = K.transpose(0, 2, 1, 3).reshape(npts * p, npts * p)
        worst = min(worst, float(np.linalg.eigvalsh(0.5 * (M + M.T))[0]))
    tol = TOL.psd * (1 + npts * float(np.max(np.abs(b))))
    return Check("l1 point clouds in R^m' give PSD covariances", worst >= -tol, worst,
                 f"{npts} points x 3 spreads")


# -- evaluation on graphs ---------------------------------------------------------

def _require_tree(spec: TreeKernelSpec, g: GraphEE):
    if not spec.evaluable:
        raise TreeKernelError("tree kernel spec is not certified valid")
    if not g.is_tree():
        raise TreeKernelError("graph is not a tree")
    if g.leaf_count() > spec.m:
        raise TreeKernelError(f"tree has {g.leaf_count()} leaves but the kernel is valid "
                              f"for at most {spec.m}")


def tree_kernel_on_graph(spec: TreeKernelSpec, g: GraphEE, u1: Point, u2: Point) -> np.ndarray:
    _require_tree(spec, g)
    return spec(g.tree_geodesic(u1, u2))


def tree_kernel_cov(spec: TreeKernelSpec, g: GraphEE, points, points_b=None) -> np.ndarray:
    """Point-major Np x Np covariance of a tree kernel."""
    _require_tree(spec, g)
    T = g.tree_distance_matrix(points, points_b)
    K = _tree_values(spec, T)  # (Na, Nb, p, p)
    Na, Nb, p, _ = K.shape
    out = K.transpose(0, 2, 1, 3).reshape(Na * p, Nb * p)
    if points_b is None:
        out = 0.5 * (out + out.T)
    return out


def load_tree_kernel(path) -> TreeKernelSpec:
    with open(path) as fh:
        return TreeKernelSpec.from_json(fh.read())


def bivariate_askey_spec() -> TreeKernelSpec:
    """The bivariate Askey example: scales 4, 1 and 2.5, collocated correlation 0.6.

    With m = 4 leaves (m' = 2) and nu = 2 every entry is (1 - t/b)_+^3.
    """
    return TreeKernelSpec("askey1", 4, {"nu": 2.0,
                                        "rho": np.array([[1.0, 0.6], [0.6, 1.0]]),
                                        "b": np.array([[4.0, 2.5], [2.5, 1.0]])})


def h_tree() -> GraphEE:
    """H-shaped tree with 4 leaves used for the bivariate Askey example.

    Two internal vertices joined by a bridge, each carrying two leaves; the
    diameter (6.5) exceeds the largest support radius (4).
    """
    from .graph import Edge

    edges = [Edge("e1", "leaf1", "hubA", 3.0), Edge("e2", "leaf2", "hubA", 2.0),
             Edge("e3", "hubA", "hubB", 1.5), Edge("e4", "hubB", "leaf3", 2.5),
             Edge("e5", "hubB", "leaf4", 2.0)]
    return GraphEE(["hubA", "hubB", "leaf1", "leaf2", "leaf3", "leaf4"], edges)
