"""Command-line interface.

Exit codes: 0 success, 1 validation failure, 2 usage error.  Files are only
written inside ``--out``; without it results go to stdout.  Each run with
``--out`` also writes ``manifest.json`` describing the command and inputs.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .field import FieldError, build_field_model
from .graph import GraphError, Point, load_graph, load_points, random_points
from .kernels import FAMILIES, KernelError, KernelSpec, kernel_cov
from .metric import (REGIMES, MetricError, asymptotic_gaps, distance_blocks,
                     resistance_matrix)
from .psd import PsdError, cnd_check, psd_check
from .simulate import SimulationError, sample
from .spectral import SpectralError, read_matrix_csv
from .tree_kernels import TreeKernelError, TreeKernelSpec, tree_kernel_cov

USAGE_ERRORS = (FileNotFoundError, IsADirectoryError, json.JSONDecodeError)
VALIDATION_ERRORS = (GraphError, FieldError, KernelError, MetricError, PsdError,
                     SimulationError, SpectralError, TreeKernelError)


class UsageError(Exception):
    pass


class Output:
    """Writes named artifacts inside one directory, or to stdout."""

    def __init__(self, out: str | None, fmt: str):
        self.dir = out
        self.fmt = fmt
        self.files: list = []
        if out is not None:
            os.makedirs(out, exist_ok=True)

    def _path(self, name: str) -> str:
        root = os.path.realpath(self.dir)
        path = os.path.realpath(os.path.join(root, name))
        if os.path.commonpath([root, path]) != root:
            raise UsageError(f"refusing to write outside --out: {name}")
        return path

    def text(self, name: str, text: str):
        if self.dir is None:
            sys.stdout.write(text)
            return
        with open(self._path(name), "w", newline="") as fh:
            fh.write(text)
        self.files.append(name)

    def table(self, stem: str, columns, rows):
        if self.fmt == "json":
            self.text(stem + ".json", json.dumps([{c: r[c] for c in columns} for r in rows],
                                                 indent=2) + "\n")
            return
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])
        self.text(stem + ".csv", buf.getvalue())

    def json(self, stem: str, obj):
        self.text(stem + ".json", json.dumps(obj, indent=2, default=_json_default) + "\n")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(type(o).__name__)


def _hash_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


# -- input helpers ------------------------------------------------------------

def _need(args, name):
    v = getattr(args, name, None)
    if v is None:
        raise UsageError(f"--{name.replace('_', '-')} is required for this command")
    return v


def _graph(args):
    return load_graph(_need(args, "graph"))


def _points(args, g):
    if getattr(args, "points", None):
        return [g.canonical(u) for u in load_points(args.points)]
    if getattr(args, "random_points", None):
        return random_points(g, args.random_points, np.random.default_rng(args.seed))
    return [Point.at_vertex(v) for v in g.vertices]


def _model(args, g):
    return build_field_model(g, _need(args, "p"), _need(args, "alpha"), args.beta)


def _read_kernel_json(path):
    with open(path) as fh:
        return json.load(fh)


def _is_tree_kernel(doc) -> bool:
    return doc.get("family") not in FAMILIES


def _pair_rows(points, fn):
    rows = []
    for i in range(len(points)):
        for j in range(i, len(points)):
            rows.append(fn(i, j))
    return rows


# -- commands -----------------------------------------------------------------

def cmd_graph(args, out: Output) -> int:
    g = _graph(args)
    if args.action == "validate":
        out.json("graph", {"valid": True, "n": g.n, "edges": len(g.edges),
                           "is_tree": g.is_tree(), "leaves": g.leaf_count(),
                           "total_length": g.total_length(), "hash": g.content_hash()})
        return 0
    L = g.laplacian()
    buf = io.StringIO()
    buf.write(f"# {L.shape[0]},{L.shape[1]}\n")
    buf.write("# order: " + ",".join(g.vertices) + "\n")
    for row in L:
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    out.text("laplacian.csv", buf.getvalue())
    return 0


def cmd_metric(args, out: Output) -> int:
    g = _graph(args)
    if args.action == "asymptotics":
        pts = _points(args, g)
        if len(pts) < 2:
            raise UsageError("asymptotics needs two points")
        regimes = [args.regime] if args.regime else list(REGIMES)
        rows = []
        for reg in regimes:
            for scale in args.scale:
                gaps = asymptotic_gaps(g, reg, scale, pts[0], pts[1], args.tau)
                rows.append({"regime": reg, "scale": scale, **gaps})
        out.table("asymptotics", ("regime", "scale", "p", "alpha", "Q", "X", "D_off"), rows)
        return 0
    pts = _points(args, g)
    labels = [u.label() for u in pts]
    if args.action == "resistance":
        R = resistance_matrix(g, pts)
        rows = _pair_rows(pts, lambda i, j: {"u1": labels[i], "u2": labels[j], "d_R": R[i, j]})
        out.table("resistance", ("u1", "u2", "d_R"), rows)
        return 0
    m = _model(args, g)
    d, o = distance_blocks(m, pts)
    rows = _pair_rows(pts, lambda i, j: {"u1": labels[i], "u2": labels[j],
                                         "D_diag": d[i, j], "D_offdiag": o[i, j]})
    out.table("distance", ("u1", "u2", "D_diag", "D_offdiag"), rows)
    return 0


def _kernel_rows(K, labels, p):
    rows = []
    for a in range(len(labels)):
        for b in range(a, len(labels)):
            for i in range(p):
                for j in range(p):
                    rows.append({"u1": labels[a], "u2": labels[b], "i": i + 1, "j": j + 1,
                                 "value": K[a * p + i, b * p + j]})
    return rows


def cmd_kernel(args, out: Output) -> int:
    doc = _read_kernel_json(_need(args, "kernel"))
    spec = KernelSpec.from_json(doc).certified()
    if args.action == "certify":
        out.json("certificate", spec.certificate.to_json())
        return 0 if spec.certificate.valid else 1
    if not spec.evaluable:
        out.json("certificate", spec.certificate.to_json())
        return 1
    g = _graph(args)
    pts = _points(args, g)
    if args.p is None and spec.p is not None:
        args.p = spec.p
    m = _model(args, g)
    K = kernel_cov(spec, m, pts)
    out.table("kernel", ("u1", "u2", "i", "j", "value"), _kernel_rows(K, [u.label() for u in pts], m.p))
    return 0


def cmd_tree_kernel(args, out: Output) -> int:
    spec = TreeKernelSpec.from_json(_read_kernel_json(_need(args, "kernel"))).certified()
    if args.action == "certify":
        out.json("certificate", spec.certificate.to_json())
        return 0 if spec.certificate.valid else 1
    if not spec.evaluable:
        out.json("certificate", spec.certificate.to_json())
        return 1
    g = _graph(args)
    pts = _points(args, g)
    K = tree_kernel_cov(spec, g, pts)
    out.table("tree_kernel", ("u1", "u2", "i", "j", "value"),
              _kernel_rows(K, [u.label() for u in pts], spec.p))
    return 0


def cmd_simulate(args, out: Output) -> int:
    g = _graph(args)
    pts = _points(args, g)
    if args.kernel is None:
        S = sample(_model(args, g), pts, args.n_real, args.seed)
    else:
        doc = _read_kernel_json(args.kernel)
        if _is_tree_kernel(doc):
            spec = TreeKernelSpec.from_json(doc).certified()
            S = sample(spec, pts, args.n_real, args.seed, g=g)
        else:
            spec = KernelSpec.from_json(doc).certified()
            if args.p is None and spec.p is not None:
                args.p = spec.p
            S = sample(spec, pts, args.n_real, args.seed, model=_model(args, g))
    out.text("realizations.csv", S.to_csv())
    if out.dir is not None:
        out.json("points", {"points": [u.to_json() for u in pts]})
        out.json("simulation", {"jitter": S.jitter, **S.meta, "seed": S.seed, "p": S.p,
                                "n_points": len(pts)})
    return 0


def cmd_psd(args, out: Output) -> int:
    A = read_matrix_csv(_need(args, "matrix"))
    v = cnd_check(A, args.tol) if args.mode == "cnd" else psd_check(A, args.tol)
    out.json("verdict", {"mode": args.mode, **v.to_json()})
    return 0 if v.passed else 1


def cmd_reproduce(args, out: Output) -> int:
    from . import reproduce as rp

    if args.target == "appendix-b":
        out.table("appendix_b", rp.PATH_EXAMPLE_COLUMNS, rp.path_example_rows())
    elif args.target == "figure-3":
        out.table("figure_3", rp.PROFILE_COLUMNS, rp.kernel_profile_rows(args.step))
    else:
        n = args.random_points or 750
        S = rp.askey_tree_sample(n, args.seed, args.n_real)
        out.text("figure_4.csv", S.to_csv())
        if out.dir is not None:
            out.json("points", {"points": [u.to_json() for u in S.points]})
    return 0


# -- parser ---------------------------------------------------------------------

def _common(p: argparse.ArgumentParser):
    p.add_argument("--graph", help="graph JSON file")
    p.add_argument("--kernel", help="kernel JSON file")
    p.add_argument("--points", help="points JSON file")
    p.add_argument("--random-points", type=int, help="place N points uniformly by length")
    p.add_argument("--p", type=int, help="number of field components")
    p.add_argument("--alpha", type=float, help="cross-precision scale alpha > 0")
    p.add_argument("--beta", type=float, default=0.0, help="edge-bridge cross-correlation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output directory (stdout if omitted)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="metricgp",
                                 description="Multivariate covariance kernels on graphs with Euclidean edges.")
    ap.add_argument("--version", action="version", version=f"metricgp {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("graph", help="validate a graph or export its Laplacian")
    g.add_argument("action", choices=("validate", "laplacian"))
    _common(g)

    m = sub.add_parser("metric", help="matrix metric D, resistance metric, asymptotic regimes")
    m.add_argument("action", choices=("distance", "resistance", "asymptotics"))
    m.add_argument("--regime", choices=sorted(REGIMES))
    m.add_argument("--scale", type=float, nargs="+", default=[200.0, 2000.0])
    m.add_argument("--tau", type=float)
    _common(m)

    k = sub.add_parser("kernel", help="certify or evaluate a metric kernel")
    k.add_argument("action", choices=("certify", "eval"))
    _common(k)

    t = sub.add_parser("tree-kernel", help="certify or evaluate a tree kernel")
    t.add_argument("action", choices=("certify", "eval"))
    _common(t)

    s = sub.add_parser("simulate", help="draw Gaussian realisations at points")
    s.add_argument("--n-real", type=int, default=1)
    _common(s)

    ps = sub.add_parser("psd", help="PSD / CND verdict for a matrix CSV")
    ps.add_argument("action", choices=("check",))
    ps.add_argument("--matrix", help="matrix CSV with '# rows,cols' header")
    ps.add_argument("--mode", choices=("psd", "cnd"), default="psd")
    ps.add_argument("--tol", type=float)
    ps.add_argument("--out")
    ps.add_argument("--format", choices=("csv", "json"), default="json")

    r = sub.add_parser("reproduce", help="regenerate the worked examples")
    r.add_argument("target", choices=("appendix-b", "figure-3", "figure-4"))
    r.add_argument("--step", type=float, default=0.05, help="figure-3 sampling step")
    r.add_argument("--n-real", type=int, default=1)
    r.add_argument("--random-points", type=int, help="figure-4 site count (default 750)")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out")
    r.add_argument("--format", choices=("csv", "json"), default="csv")
    return ap


COMMANDS = {"graph": cmd_graph, "metric": cmd_metric, "kernel": cmd_kernel,
            "tree-kernel": cmd_tree_kernel, "simulate": cmd_simulate, "psd": cmd_psd,
            "reproduce": cmd_reproduce}


def _manifest(args, argv, out: Output, started: float, code: int) -> dict:
    inputs = {}
    for name in ("graph", "kernel", "points", "matrix"):
        path = getattr(args, name, None)
        if path and os.path.isfile(path):
            inputs[name] = {"path": path, "sha256": _hash_file(path)}
    arguments = {k: v for k, v in vars(args).items() if k not in ("out",)}
    return {"command": " ".join(x for x in (args.command, getattr(args, "action", None),
                                             getattr(args, "target", None)) if x),
            "argv": list(argv), "arguments": arguments, "inputs": inputs,
            "seed": getattr(args, "seed", None), "version": __version__,
            "backend": _backend_name(), "outputs": list(out.files), "exit_code": code,
            "wall_time_s": round(time.perf_counter() - started, 6)}


def _backend_name():
    from . import _backend

    return _backend.NAME


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    started = time.perf_counter()
    try:
        out = Output(args.out, args.format)
    except OSError as exc:
        print(f"error: cannot create --out: {exc}", file=sys.stderr)
        return 2
    try:
        code = COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except USAGE_ERRORS as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except VALIDATION_ERRORS as exc:
        code_name = getattr(exc, "code", None)
        diag = {"error": type(exc).__name__, "message": str(exc)}
        if code_name:
            diag["code"] = code_name
        print(json.dumps(diag), file=sys.stderr)
        code = 1
    if out.dir is not None:
        out.json("manifest", _manifest(args, argv, out, started, code))
    return code


if __name__ == "__main__":
    sys.exit(main())
