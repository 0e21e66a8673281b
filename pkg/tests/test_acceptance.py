"""Acceptance criteria 1-8.

Each test prints one ``criterion N: PASS|FAIL`` line (run with ``-s`` to see
them, or ``python tests/test_acceptance.py`` for the bare report).
"""
import os
import subprocess
import sys
import time

import numpy as np

sys.path.insert(0, os.path.dirname(__file__))

from metricgp.field import build_field_model  # noqa: E402
from metricgp.graph import Point, path_graph, random_connected_graph, random_points  # noqa: E402
from metricgp.kernels import kernel_cov  # noqa: E402
from metricgp.metric import (REGIMES, asymptotic_gaps, distance_blocks, distance_D,  # noqa: E402
                             resistance_oracle)
from metricgp.psd import one_cnd_check  # noqa: E402
from metricgp.reproduce import path_example_rows  # noqa: E402
from metricgp.simulate import empirical_cov, sample, sample_from_cov  # noqa: E402
from metricgp.spectral import check_quasi_laplacian, mp_block, penrose_residuals  # noqa: E402
from metricgp.tree_kernels import (Omega, askey_phi, askey_psi, bivariate_askey_spec,  # noqa: E402
                                   h_tree, iterate_I, omega_closed, omega_eval,
                                   omega_sphere_tail, tree_kernel_cov)
from specgen import (GRAPH_FAMILIES, TREE_FAMILIES, invalid_spec, invalid_tree_spec,  # noqa: E402
                     random_certified_spec, random_tree_spec)


def report(n, checks):
    """Print the criterion line plus one line per sub-check; return overall status.

    A sub-check whose status is None is a diagnostic and does not gate.
    """
    ok = all(c[1] for c in checks if c[1] is not None)
    print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'}")
    for name, passed, detail in checks:
        tag = "info" if passed is None else ("ok" if passed else "FAIL")
        print(f"    [{tag}] {name}: {detail}")
    return ok


def _rel(R, *scales):
    return float(np.linalg.norm(R) / max(1.0, *(np.linalg.norm(s) for s in scales)))


# -- 1 -----------------------------------------------------------------------------

def criterion_1():
    t0 = time.perf_counter()
    rows = {r["case"]: r for r in path_example_rows()}
    dt = time.perf_counter() - t0
    s, h, half, big = rows["alpha-star"], rows["alpha-hat"], rows["alpha-0.5"], rows["alpha-1/p"]
    worst_d11 = max(abs(r["D11"] - 2.0) for r in rows.values())
    return [
        ("D11(v1,v3) = 2", worst_d11 <= 1e-10, f"max |D11 - 2| = {worst_d11:.2e}"),
        ("X13 at alpha*", abs(s["X13"] + 0.48598) <= 1e-5, f"{s['X13']:.7f}"),
        ("D12 at alpha*", abs(s["D12"] - 1.99896) <= 1e-4, f"{s['D12']:.7f}"),
        ("d at alpha-hat", abs(h["d"]) <= 1e-4, f"{h['d']:.3e}"),
        ("d(0.5) < 0", half["d"] < 0, f"{half['d']:.5f}"),
        ("d at alpha = 1/p, p = 1e4", abs(big["d"] - 2 / 9) <= 0.01, f"{big['d']:.5f} vs {2 / 9:.5f}"),
        ("runtime < 1 s", dt < 1.0, f"{dt:.3f} s"),
    ]


# -- 2 -----------------------------------------------------------------------------

def criterion_2(instances=50, tol=1e-9):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = {"product": 0.0, "SigmaL": 0.0, "Q2": 0.0, "SigmaQ2": 0.0, "commute": 0.0, "penrose": 0.0}
    ql_ok = True
    for _ in range(instances):
        n = int(rng.integers(2, 13))
        p = int(rng.integers(2, 5))
        g = random_connected_graph(rng, n)
        m = build_field_model(g, p, float(rng.uniform(0.05, 5)))
        L, S, Q, X, a = m.L, m.Sigma, m.Q, m.X, m.alpha
        I, J = np.eye(n), np.ones((n, n))
        A, B, C, D = rng.standard_normal((4, n, n))
        lhs = mp_block(A, B, p) @ mp_block(C, D, p)
        rhs = mp_block(A @ C + (p - 1) * B @ D, A @ D + B @ C + (p - 2) * B @ D, p)
        worst["product"] = max(worst["product"], _rel(lhs - rhs, lhs))
        worst["SigmaL"] = max(worst["SigmaL"], _rel(S @ L - (I - J / n), I), _rel(L @ S - (I - J / n), I))
        R = Q @ Q - a * a * (p - 1) * I - Q @ L - a * (p - 2) * Q + a * (p - 2) * L
        worst["Q2"] = max(worst["Q2"], _rel(R, Q @ Q, Q @ L))
        R = S @ Q @ Q - a * a * (p - 1) * S - Q - a * (p - 2) * S @ Q + a * (p - 2) * I + a / n * J
        worst["SigmaQ2"] = max(worst["SigmaQ2"], _rel(R, S @ Q @ Q, Q))
        mats = (S, L, Q, X)
        for i in range(4):
            for j in range(i + 1, 4):
                P1, P2 = mats[i] @ mats[j], mats[j] @ mats[i]
                worst["commute"] = max(worst["commute"], _rel(P1 - P2, P1))
        Theta, Kt = m.Theta, m.K_vertices
        worst["penrose"] = max(worst["penrose"], max(penrose_residuals(Theta, Kt)))
        ql_ok &= check_quasi_laplacian(Theta).ok and check_quasi_laplacian(Kt).ok
    dt = time.perf_counter() - t0
    checks = [(f"{k} identity", v <= tol, f"max relative residual {v:.2e}") for k, v in worst.items()]
    checks.append(("Theta and its pseudo-inverse quasi-Laplacian", ql_ok, f"{instances} models"))
    checks.append(("runtime < 30 s", dt < 30, f"{dt:.2f} s"))
    return checks


# -- 3 -----------------------------------------------------------------------------

def criterion_3(instances=200, slack=-1e-8):
    rng = np.random.default_rng(3)
    w = {"nonneg": np.inf, "zero_diag": 0.0, "pos_off": np.inf, "pos_distinct": np.inf,
         "sym": 0.0, "item4": np.inf, "diff_a": np.inf, "diff_b": np.inf, "diff_b0": np.inf,
         "cnd": np.inf}
    for _ in range(instances):
        n = int(rng.integers(2, 10))
        p = int(rng.integers(2, 5))
        g = random_connected_graph(rng, n)
        m = build_field_model(g, p, float(rng.uniform(0.1, 5)), float(rng.uniform(0, 1)))
        pts = list(dict.fromkeys(random_points(g, 6, rng)))
        u0 = pts[0]
        N = len(pts)
        d, o = distance_blocks(m, pts)
        off = ~np.eye(N, dtype=bool)
        w["nonneg"] = min(w["nonneg"], d.min(), o.min())
        w["zero_diag"] = max(w["zero_diag"], float(np.max(np.abs(np.diag(d)))))
        w["pos_off"] = min(w["pos_off"], float(np.min(np.diag(o))))
        if N > 1:
            w["pos_distinct"] = min(w["pos_distinct"], float(d[off].min()))
        Dm = lambda a, b: distance_D(m, a, b).matrix()  # noqa: E731
        u1, u2 = pts[1 % N], pts[2 % N]
        D12 = Dm(u1, u2)
        w["sym"] = max(w["sym"], float(np.max(np.abs(D12 - D12.T))), float(np.max(np.abs(D12 - Dm(u2, u1)))))
        # item 4: block matrix over the points must be PSD for A with A^T 1 = 1
        A = rng.standard_normal((p, p))
        A += (1 - A.sum(axis=0)) / p
        D00 = Dm(u0, u0)
        F = np.empty((N * p, N * p))
        for i in range(N):
            for j in range(N):
                F[i * p:(i + 1) * p, j * p:(j + 1) * p] = (
                    Dm(pts[i], u0) @ A + A.T @ Dm(u0, pts[j]) - Dm(pts[i], pts[j]) - A.T @ D00 @ A)
        w["item4"] = min(w["item4"], float(np.linalg.eigvalsh(0.5 * (F + F.T))[0]))
        # item 5 on random triples, including coincident points
        trip = [(u0, u1, u2), (u1, u1, u1), (u0, u1, u1), (u1, u2, u0)]
        for a0, a1, a2 in trip:
            Da = Dm(a1, a2) - Dm(a0, a0)
            Db = 2 * Dm(a1, a0) + 2 * Dm(a2, a0) - Dm(a1, a2) - 3 * Dm(a0, a0)
            w["diff_a"] = min(w["diff_a"], float(np.linalg.eigvalsh(Da)[0]))
            w["diff_b"] = min(w["diff_b"], float(np.linalg.eigvalsh(Db)[0]))
        # same second difference for the vertex field alone (beta = 0)
        m0 = build_field_model(g, p, m.alpha, 0.0)
        D0 = lambda a, b: distance_D(m0, a, b).matrix()  # noqa: E731
        for a0, a1, a2 in trip:
            Db = 2 * D0(a1, a0) + 2 * D0(a2, a0) - D0(a1, a2) - 3 * D0(a0, a0)
            w["diff_b0"] = min(w["diff_b0"], float(np.linalg.eigvalsh(Db)[0]))
        exact, rnd = one_cnd_check(Dm, pts, p, trials=50, rng=rng)
        w["cnd"] = min(w["cnd"], exact.min_eig, rnd.min_eig)
    return [
        ("D_ij >= 0", w["nonneg"] >= slack, f"min entry {w['nonneg']:.3e}"),
        ("D_ii(u,u) = 0", w["zero_diag"] == 0.0, f"max |D_ii(u,u)| {w['zero_diag']:.1e}"),
        ("D_ij(u,u) > 0 for i != j", w["pos_off"] > 0, f"min {w['pos_off']:.3e}"),
        ("D_ii(u1,u2) > 0 for u1 != u2", w["pos_distinct"] > 0, f"min {w['pos_distinct']:.3e}"),
        ("symmetry", w["sym"] <= 1e-12, f"max asymmetry {w['sym']:.1e}"),
        ("A-transformed difference mapping PSD", w["item4"] >= slack, f"min eig {w['item4']:.3e}"),
        ("D(u1,u2) - D(u0,u0) PSD", w["diff_a"] >= slack, f"min eig {w['diff_a']:.3e}"),
        ("2D(u1,u0) + 2D(u2,u0) - D(u1,u2) - 3D(u0,u0) PSD", w["diff_b"] >= slack,
         f"min eig {w['diff_b']:.3e}"),
        ("same second difference with beta = 0", None, f"min eig {w['diff_b0']:.3e}"),
        ("1_p-conditional negative semidefiniteness", w["cnd"] >= slack, f"slack {w['cnd']:.3e}"),
    ]


# -- 4 -----------------------------------------------------------------------------

def criterion_4(graphs=20, pairs=5):
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(graphs):
        g = random_connected_graph(rng, int(rng.integers(2, 11)))
        m = build_field_model(g, int(rng.integers(2, 5)), float(rng.uniform(0.1, 5)), float(rng.uniform(0, 1)))
        for _ in range(pairs):
            u1, u2 = random_points(g, 2, rng)
            d = distance_D(m, u1, u2).diag
            for j in range(g.n):
                worst = max(worst, abs(d - resistance_oracle(g, u1, u2, j)))
    return [("D_ii equals grounded-Laplacian resistance for every j", worst <= 1e-9,
             f"{graphs * pairs} pairs, max abs diff {worst:.2e}")]


# -- 5 -----------------------------------------------------------------------------

def criterion_5():
    """Gated on the 3-vertex path; random graphs are reported and rate-checked.

    At a fixed scale the relative gap grows with n, p and the edge lengths
    (the limits are leading terms in 1/alpha, p or alpha), so the 5% / 1%
    thresholds are a statement about a given graph.
    """
    g3 = path_graph(3)
    gated = [(g3, Point.at_vertex("v1"), Point.at_vertex("v3")),
             (g3, Point.at_vertex("v1"), Point.on_edge("e2", 0.4)),
             (g3, Point.on_edge("e1", 0.25), Point.on_edge("e2", 0.75))]
    rng = np.random.default_rng(5)
    extra = []
    for _ in range(3):
        g = random_connected_graph(rng, 6)
        extra.append((g, *random_points(g, 2, rng)))

    def worst(cases, regime, scale):
        out = 0.0
        for g, u1, u2 in cases:
            gaps = asymptotic_gaps(g, regime, scale, u1, u2)
            out = max(out, gaps["Q"], gaps["X"], gaps["D_off"])
        return out

    checks = []
    for regime in sorted(REGIMES):
        w200, w2000 = worst(gated, regime, 200), worst(gated, regime, 2000)
        checks.append((f"{regime} at 200 within 5%", w200 <= 0.05, f"max rel gap {w200:.3e}"))
        checks.append((f"{regime} at 2000 within 1%", w2000 <= 0.01, f"max rel gap {w2000:.3e}"))
        r200, r2000 = worst(extra, regime, 200), worst(extra, regime, 2000)
        checks.append((f"{regime} on random 6-vertex graphs", None,
                       f"max rel gap {r200:.3e} at 200, {r2000:.3e} at 2000"))
        checks.append((f"{regime} on random graphs: gap shrinks at least 5x from 200 to 2000",
                       r2000 <= r200 / 5, f"ratio {r200 / max(r2000, 1e-300):.1f}"))
    return checks


# -- 6 -----------------------------------------------------------------------------

def criterion_6(specs=100, floor=-1e-6):
    rng = np.random.default_rng(6)
    worst, count = np.inf, 0
    fams = GRAPH_FAMILIES + tuple("tree:" + f for f in TREE_FAMILIES)
    for k in range(specs):
        fam = fams[k % len(fams)]
        npts = int(rng.integers(8, 17))
        if fam.startswith("tree:"):
            s = random_tree_spec(fam[5:], rng)
            g = h_tree()
            C = tree_kernel_cov(s, g, random_points(g, npts, rng))
        else:
            p = 2 if fam == "sg2" else int(rng.integers(2, 5))
            s = random_certified_spec(fam, p, rng)
            g = random_connected_graph(rng, int(rng.integers(3, 10)))
            m = build_field_model(g, p, float(rng.uniform(0.2, 3)), float(rng.uniform(0, 1)))
            C = kernel_cov(s, m, random_points(g, npts, rng))
        worst = min(worst, float(np.linalg.eigvalsh(C)[0]))
        count += 1
    checks = [(f"{count} certified specs give PSD covariances", worst >= floor, f"min eig {worst:.3e}")]
    rejected = [f for f in GRAPH_FAMILIES if not invalid_spec(f).certified().certificate.valid]
    rejected += ["tree:" + f for f in TREE_FAMILIES if not invalid_tree_spec(f).certified().certificate.valid]
    checks.append(("one invalid spec per family rejected", len(rejected) == len(fams),
                   f"{len(rejected)}/{len(fams)} rejected"))
    # the rejected multivariate Matern example really is indefinite
    spec = invalid_spec("matern_p")
    spec.override = True
    r = np.random.default_rng(5)
    g = random_connected_graph(r, 6)
    m = build_field_model(g, 2, 1.0, 0.5)
    wit = float(np.linalg.eigvalsh(kernel_cov(spec, m, random_points(g, 16, r)))[0])
    checks.append(("negative-eigenvalue witness for the rejected Matern spec", wit < 0, f"min eig {wit:.3f}"))
    return checks


# -- 7 -----------------------------------------------------------------------------

def criterion_7(seed=0, n_mc=20_000):
    checks = []
    t = np.linspace(0.0, 20.0, 201)
    err = max(float(np.max(np.abs(omega_eval(o, t, "quad") - omega_closed(o, t)))) for o in (2, 3))
    checks.append(("omega_2/omega_3 closed forms vs quadrature on [0, 20]", err <= 1e-6, f"max diff {err:.2e}"))
    tg = np.linspace(0.0, 1.2, 25)
    err = 0.0
    for fam in (1, 2):
        for mp in (1, 2, 3, 4):
            nu = mp + 1.3
            f = iterate_I(lambda u: float(askey_psi(fam, nu, u)), mp - 1, support=1.0)
            err = max(err, float(np.max(np.abs(f(tg) - askey_phi(fam, nu, mp, tg)))))
    for mp in (2, 3):
        o = 2 * mp - 1
        f = iterate_I(lambda u: float(Omega(o, u)), mp - 1, tail=omega_sphere_tail(o))
        err = max(err, float(np.max(np.abs(f(tg * 5) - omega_closed(mp, tg * 5)))))
    checks.append(("iterated tail integrals match closed forms", err <= 1e-8, f"max diff {err:.2e}"))
    g = h_tree()
    spec = bivariate_askey_spec().certified()
    C50 = tree_kernel_cov(spec, g, random_points(g, 50, np.random.default_rng(seed)))
    me = float(np.linalg.eigvalsh(C50)[0])
    checks.append(("bivariate Askey covariance over 50 points PSD", spec.certificate.valid and me >= -1e-8,
                   f"min eig {me:.3e}"))
    t0 = time.perf_counter()
    S = sample(spec, random_points(g, 750, np.random.default_rng(seed)), 1, seed, g=g)
    dt = time.perf_counter() - t0
    checks.append(("750-site simulation < 10 s", dt < 10 and np.all(np.isfinite(S.realizations)),
                   f"{dt:.2f} s, jitter {S.jitter:.1e}"))
    sub = S.points[:5]
    C = tree_kernel_cov(spec, g, sub)
    mc = sample_from_cov(C, 2, n_mc, seed, sub)
    E = empirical_cov(mc.realizations)
    d = np.diag(C)
    se = np.sqrt((np.outer(d, d) + C ** 2) / (n_mc - 1))
    iu = np.triu_indices(C.shape[0])
    z = float(np.max(np.abs(E - C)[iu] / np.where(se[iu] > 0, se[iu], np.inf)))
    checks.append((f"{n_mc} realizations on 5 sites within 3 MC standard errors", z <= 3.0,
                   f"max |z| = {z:.2f} over {len(iu[0])} entries (seed {seed})"))
    return checks


# -- 8 -----------------------------------------------------------------------------

def _cli(args, env_threads, out):
    env = dict(os.environ, METRICGP_THREADS=str(env_threads))
    r = subprocess.run([sys.executable, "-m", "metricgp.cli", *args, "--out", str(out)],
                       capture_output=True, env=env)
    if r.returncode != 0:
        raise RuntimeError(r.stderr.decode())
    with open(os.path.join(out, "realizations.csv"), "rb") as fh:
        return fh.read()


def criterion_8(tmpdir):
    gpath = os.path.join(tmpdir, "graph.json")
    kpath = os.path.join(tmpdir, "kernel.json")
    import json

    with open(gpath, "w") as fh:
        json.dump(h_tree().to_json(), fh)
    with open(kpath, "w") as fh:
        json.dump(bivariate_askey_spec().to_json(), fh)
    field = ["simulate", "--graph", gpath, "--p", "3", "--alpha", "0.7", "--beta", "0.3",
             "--random-points", "300", "--n-real", "600", "--seed", "42"]
    tree = ["simulate", "--graph", gpath, "--kernel", kpath, "--random-points", "300",
            "--n-real", "600", "--seed", "42"]
    checks = []
    for name, args in (("field model", field), ("tree kernel", tree)):
        a = _cli(args, 1, os.path.join(tmpdir, name + "a"))
        b = _cli(args, 1, os.path.join(tmpdir, name + "b"))
        c = _cli(args, 4, os.path.join(tmpdir, name + "c"))
        checks.append((f"{name}: two runs byte-identical", a == b, f"{len(a)} bytes"))
        checks.append((f"{name}: 1 vs 4 threads byte-identical", a == c, f"{len(c)} bytes"))
    return checks


# -- pytest entry points ---------------------------------------------------------------

def test_criterion_1_path_graph_regression():
    assert report(1, criterion_1())


def test_criterion_2_structural_identities():
    assert report(2, criterion_2())


def test_criterion_3_metric_properties():
    assert report(3, criterion_3())


def test_criterion_4_resistance_equality():
    assert report(4, criterion_4())


def test_criterion_5_asymptotic_regimes():
    assert report(5, criterion_5())


def test_criterion_6_kernel_validity():
    assert report(6, criterion_6())


def test_criterion_7_tree_kernels():
    assert report(7, criterion_7())


def test_criterion_8_determinism(tmp_path):
    assert report(8, criterion_8(str(tmp_path)))


if __name__ == "__main__":
    import tempfile

    results = [report(1, criterion_1()), report(2, criterion_2()), report(3, criterion_3()),
               report(4, criterion_4()), report(5, criterion_5()), report(6, criterion_6()),
               report(7, criterion_7())]
    with tempfile.TemporaryDirectory() as d:
        results.append(report(8, criterion_8(d)))
    sys.exit(0 if all(results) else 1)
