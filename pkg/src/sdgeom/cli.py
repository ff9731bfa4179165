"""Command-line front end: parse a .sdg file, dispatch to the engine, print
deterministic text or JSON.

Exit codes: 0 success / check true, 1 check evaluated false, 2 parse or
usage error, 3 numeric failure (rank drop, domain violation, log branch).
"""

import argparse
import math
import sys

import numpy as np

from . import connections as cn
from . import distributions as ds
from . import expr as ex
from . import forms as fm
from .chart import Point
from .errors import (ChartDomainError, DomainError, LogBranchError,
                     ParseError, RankDeficiencyError, SdgError)
from .program import parse_file
from .sampling import parse_box, sample_box

EXIT_OK = 0
EXIT_FALSE = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3


def _fmt(x):
    """17-significant-digit rendering used in both text and JSON output."""
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _to_jsonable(obj):
    if isinstance(obj, float):
        return obj
    if isinstance(obj, np.ndarray):
        return [_to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    return obj


def _json_dump(obj, out):
    """Stable-order JSON with floats at 17 significant digits."""
    def emit(o):
        if isinstance(o, dict):
            return "{" + ", ".join(f"\"{k}\": {emit(v)}" for k, v in o.items()) + "}"
        if isinstance(o, (list, tuple)):
            return "[" + ", ".join(emit(v) for v in o) + "]"
        if isinstance(o, bool):
            return "true" if o else "false"
        if isinstance(o, float):
            return _fmt(o)
        if isinstance(o, int):
            return str(o)
        if o is None:
            return "null"
        return "\"" + str(o).replace("\\", "\\\\").replace("\"", "\\\"") + "\""

    out.write(emit(_to_jsonable(obj)) + "\n")


class _Reporter:
    def __init__(self, fmt, out):
        self.fmt = fmt
        self.out = out
        self.payload = {}

    def add(self, key, value):
        self.payload[key] = value

    def line(self, text):
        if self.fmt == "text":
            self.out.write(text + "\n")

    def finish(self):
        if self.fmt == "json":
            _json_dump(self.payload, self.out)


def _parse_points(text, dim):
    points = []
    for chunk in text.split(";"):
        coords = [float(v) for v in chunk.split(",")]
        if len(coords) != dim:
            raise ValueError(f"point needs {dim} coordinates")
        points.append(Point(coords))
    return points


def _mat_list(M):
    return [[float(v) for v in row] for row in np.asarray(M, dtype=float)]


def _load(args):
    return parse_file(args.file)


def _get(prog, table, name, what):
    entity = getattr(prog, table).get(name)
    if entity is None:
        raise ParseError(f"unknown {what} {name!r}")
    return entity


def cmd_d(args, rep):
    prog = _load(args)
    form = _get(prog, "forms", args.form, "form")
    points = _parse_points(args.at, prog.dim)
    comb_side = fm.d_comb(fm.to_combinatorial(form))
    classical = fm.d_classical(form)
    for p in points:
        comb = fm.extract_classical(comb_side, p, tol=args.tol)
        env = dict(zip(form.vars, p.coords))
        oracle = {T: ex.evaluate(e, env) for T, e in classical.coeffs.items()}
        ratios = [comb.get(T, 0.0) / v for T, v in oracle.items()
                  if abs(v) > 1e-9]
        entry = {
            "point": list(p.coords),
            "combinatorial": {"".join(map(str, T)): v for T, v in comb.items()},
            "classical": {"".join(map(str, T)): oracle.get(T, 0.0)
                          for T in comb},
            "ratio": ratios[0] if ratios else None,
        }
        rep.add(f"at {','.join(_fmt(c) for c in p.coords)}", entry)
        rep.line(f"at ({', '.join(_fmt(c) for c in p.coords)}):")
        for T, v in sorted(comb.items()):
            label = "d" + " d".join(prog.vars[t - 1] for t in T)
            rep.line(f"  [{label}] combinatorial={_fmt(v)} "
                     f"classical={_fmt(entry['classical']['' .join(map(str, T))])}")
        rep.line(f"  measured ratio: "
                 f"{_fmt(ratios[0]) if ratios else 'n/a (zero form)'}")
    return EXIT_OK


def cmd_wedge(args, rep):
    prog = _load(args)
    name_a, _, name_b = args.forms.partition(",")
    a = _get(prog, "forms", name_a.strip(), "form")
    b = _get(prog, "forms", name_b.strip(), "form")
    points = _parse_points(args.at, prog.dim)
    comb_form = fm.wedge_comb(fm.to_combinatorial(a), fm.to_combinatorial(b))
    classical = fm.wedge_classical(a, b)
    for p in points:
        comb = fm.extract_classical(comb_form, p, tol=args.tol)
        env = dict(zip(a.vars, p.coords))
        oracle = {T: ex.evaluate(e, env) for T, e in classical.coeffs.items()}
        ratios = [comb.get(T, 0.0) / v for T, v in oracle.items()
                  if abs(v) > 1e-9]
        rep.add(f"at {','.join(_fmt(c) for c in p.coords)}", {
            "combinatorial": {"".join(map(str, T)): v for T, v in comb.items()},
            "classical": {"".join(map(str, T)): oracle.get(T, 0.0) for T in comb},
            "ratio": ratios[0] if ratios else None,
        })
        rep.line(f"at ({', '.join(_fmt(c) for c in p.coords)}):")
        for T, v in sorted(comb.items()):
            rep.line(f"  [{''.join(map(str, T))}] combinatorial={_fmt(v)} "
                     f"classical={_fmt(oracle.get(T, 0.0))}")
        rep.line(f"  measured ratio: "
                 f"{_fmt(ratios[0]) if ratios else 'n/a (zero form)'}")
    return EXIT_OK


def cmd_eval(args, rep):
    prog = _load(args)
    form = _get(prog, "forms", args.form, "form")
    p = _parse_points(args.at, prog.dim)[0]
    vectors = [[float(v) for v in chunk.split(",")]
               for chunk in args.vectors.split(";")]
    if len(vectors) != form.degree:
        raise ParseError(f"form of degree {form.degree} needs that many vectors")
    theta = fm.to_combinatorial(form)
    if form.degree == 2:
        value = fm.eval_semi(theta, p, vectors[0], vectors[1], tol=args.tol)
    else:
        coeffs = fm.extract_classical(theta, p, tol=args.tol)
        recon = fm.classical_from_coeffs(form.degree, form.n, coeffs, form.vars)
        value = recon.apply(p.coords, vectors)
    rep.add("value", float(value))
    rep.line(f"value: {_fmt(float(value))}")
    return EXIT_OK


def cmd_check_involutive(args, rep):
    prog = _load(args)
    dist = _get(prog, "dists", args.dist, "distribution")
    samples = sample_box(parse_box(args.box, prog.dim), args.samples, args.seed)
    classical = ds.check_involutive_classical(dist, samples, tol=args.tol)
    if dist.kernel is not None:
        _, comb = ds.check_involutive_combinatorial(dist, samples, tol=args.tol)
        trust = "exact-fiber"
    else:
        _, comb = ds.pointwise_involutive_span(dist, samples)
        trust = "pointwise-numeric (lower trust)"
    agree = comb == classical
    verdict = comb and classical
    rep.add("combinatorial", comb)
    rep.add("classical", classical)
    rep.add("agree", agree)
    rep.add("mode", trust)
    word = lambda b: "involutive" if b else "non-involutive"
    rep.line(f"combinatorial: {word(comb)}; classical: {word(classical)}; "
             f"tests {'agree' if agree else 'DISAGREE'}")
    return EXIT_OK if verdict else EXIT_FALSE


def cmd_check_integral(args, rep):
    prog = _load(args)
    dist = _get(prog, "dists", args.dist, "distribution")
    patch = _get(prog, "patches", args.patch, "patch")
    box = parse_box(args.box, patch.q)
    samples = [tuple(p.coords) for p in sample_box(box, args.samples, args.seed)]
    ok = ds.check_integral_patch(dist, patch, args.mode, samples, tol=args.tol)
    rep.add("mode", args.mode)
    rep.add("integral", ok)
    rep.line(f"{args.mode} integral: {'yes' if ok else 'no'}")
    return EXIT_OK if ok else EXIT_FALSE


def cmd_curvature(args, rep):
    prog = _load(args)
    conn = _get(prog, "conns", args.conn, "connection")
    for p in _parse_points(args.at, prog.dim):
        cob = cn.curvature_coboundary(conn, p, tol=args.tol)
        oracle = cn.curvature_classical_oracle(conn, p)
        key = f"at {','.join(_fmt(c) for c in p.coords)}"
        rep.add(key, {f"F{i}{j}": {"coboundary": _mat_list(cob[(i, j)]),
                                   "classical": _mat_list(oracle[(i, j)])}
                      for (i, j) in sorted(cob)})
        rep.line(f"at ({', '.join(_fmt(c) for c in p.coords)}):")
        for (i, j) in sorted(cob):
            rep.line(f"  F{i}{j} coboundary: {_mat_list(cob[(i, j)])}")
            rep.line(f"  F{i}{j} classical:  {_mat_list(oracle[(i, j)])}")
    return EXIT_OK


def _loop_curves(args, prog):
    loops = []
    if args.loop:
        for spec in args.loop.split(";"):
            parts = spec.split()
            if parts[0] != "circle" or len(parts) != 2:
                raise ParseError(f"bad loop spec {spec!r} "
                                 "(expected 'circle cx,cy,r')")
            cx, cy, r = (float(v) for v in parts[1].split(","))
            t = ex.Var("t")
            curve = [ex.Add(ex.Const(cx), ex.Mul(ex.Const(r), ex.Call("cos", t))),
                     ex.Add(ex.Const(cy), ex.Mul(ex.Const(r), ex.Call("sin", t)))]
            if prog.dim != 2:
                raise ParseError("circle loops require a 2-dimensional chart")
            loops.append((curve, 0.0, 2.0 * math.pi))
    if args.curve:
        for name in args.curve.split(","):
            vec = _get(prog, "vectors", name.strip(), "curve vector")
            loops.append(([_subst_t(c, prog.vars) for c in vec], 0.0, 1.0))
    if not loops:
        raise ParseError("need --loop or --curve")
    return loops


def _subst_t(e, vars):
    """Curves are declared as vectors in the single parameter t := first var."""
    return _rename(e, {vars[0]: "t"})


def _rename(e, mapping):
    if isinstance(e, ex.Var):
        return ex.Var(mapping.get(e.name, e.name))
    if isinstance(e, ex.Const):
        return e
    if isinstance(e, (ex.Add, ex.Sub, ex.Mul, ex.Div)):
        return type(e)(_rename(e.left, mapping), _rename(e.right, mapping))
    if isinstance(e, ex.Neg):
        return ex.Neg(_rename(e.arg, mapping))
    if isinstance(e, ex.Pow):
        return ex.Pow(_rename(e.base, mapping), e.power)
    if isinstance(e, ex.Call):
        return ex.Call(e.fn, _rename(e.arg, mapping))
    raise TypeError(type(e).__name__)


def cmd_holonomy(args, rep):
    prog = _load(args)
    conn = _get(prog, "conns", args.conn, "connection")
    loops = _loop_curves(args, prog)
    for idx, (curve, t0, t1) in enumerate(loops):
        g = cn.parallel_transport(conn, curve, t0, t1, args.steps)
        rep.add(f"loop{idx}", {"holonomy": _mat_list(g)})
        rep.line(f"loop {idx} holonomy: {_mat_list(g)}")
        try:
            L = cn.holonomy_log(g)
            rep.add(f"loop{idx}_log", _mat_list(L))
            rep.line(f"loop {idx} log: {_mat_list(L)}")
        except LogBranchError:
            rep.add(f"loop{idx}_log", None)
            rep.line(f"loop {idx} log: no principal branch")
    return EXIT_OK


def cmd_ambrose_singer(args, rep):
    prog = _load(args)
    conn = _get(prog, "conns", args.conn, "connection")
    loops = _loop_curves(args, prog)
    samples = sample_box(parse_box(args.box, prog.dim), args.samples, args.seed)
    base = _parse_points(args.at, prog.dim)[0] if args.at else samples[0]
    ok, dim_h, resid = cn.ambrose_singer_check(
        conn, loops, samples, base, steps=args.steps, tol=args.tol)
    rep.add("inclusion", ok)
    rep.add("dim_h", dim_h)
    rep.add("max_residual", resid)
    rep.line(f"holonomy-log inclusion: {'holds' if ok else 'FAILS'} "
             f"(dim h = {dim_h}, max residual = {_fmt(resid)})")
    return EXIT_OK if ok else EXIT_FALSE


def cmd_leaf(args, rep):
    prog = _load(args)
    dist = _get(prog, "dists", args.dist, "distribution")
    start = _parse_points(args.start, prog.dim)[0]
    pts = ds.trace_leaf(dist, start, args.steps, args.stepsize)
    rep.add("points", [list(p.coords) for p in pts])
    if rep.fmt == "text":
        stride = max(1, len(pts) // 10)
        shown = pts[::stride]
        if shown[-1] is not pts[-1]:
            shown.append(pts[-1])
        for p in shown:
            rep.line(" ".join(_fmt(c) for c in p.coords))
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(
        prog="sdg",
        description="combinatorial differential geometry engine")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, *, box=False, steps=None, at=False):
        p.add_argument("--file", required=True)
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--tol", type=float, default=1e-9)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--samples", type=int, default=20)
        if box:
            p.add_argument("--box", default="-1..1")
        if steps is not None:
            p.add_argument("--steps", type=int, default=steps)
        if at:
            p.add_argument("--at", required=True,
                           help="semicolon-separated comma vectors")

    p = sub.add_parser("d", help="simplicial vs classical exterior derivative")
    common(p, at=True)
    p.add_argument("--form", required=True)
    p.set_defaults(fn=cmd_d)

    p = sub.add_parser("wedge", help="cup-product vs classical wedge")
    common(p, at=True)
    p.add_argument("--forms", required=True, help="two names, comma-separated")
    p.set_defaults(fn=cmd_wedge)

    p = sub.add_parser("eval", help="evaluate a form on displacement vectors")
    common(p, at=True)
    p.add_argument("--form", required=True)
    p.add_argument("--vectors", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("check-involutive", help="combinatorial + classical test")
    common(p, box=True)
    p.add_argument("--dist", required=True)
    p.set_defaults(fn=cmd_check_involutive)

    p = sub.add_parser("check-integral", help="weak/strong integral patch")
    common(p, box=True)
    p.add_argument("--dist", required=True)
    p.add_argument("--patch", required=True)
    p.add_argument("--mode", choices=("weak", "strong"), required=True)
    p.set_defaults(fn=cmd_check_integral)

    p = sub.add_parser("curvature", help="coboundary vs classical curvature")
    common(p, at=True)
    p.add_argument("--conn", required=True)
    p.set_defaults(fn=cmd_curvature)

    p = sub.add_parser("holonomy", help="parallel transport around loops")
    common(p, steps=10000)
    p.add_argument("--conn", required=True)
    p.add_argument("--loop", help="'circle cx,cy,r' specs, ';'-separated")
    p.add_argument("--curve", help="named curve vectors, ','-separated")
    p.set_defaults(fn=cmd_holonomy)

    p = sub.add_parser("ambrose-singer", help="holonomy-curvature inclusion")
    common(p, box=True, steps=2000)
    p.add_argument("--conn", required=True)
    p.add_argument("--loop")
    p.add_argument("--curve")
    p.add_argument("--at", help="basepoint")
    p.set_defaults(fn=cmd_ambrose_singer)

    p = sub.add_parser("leaf", help="numeric leaf trace along span fields")
    common(p)
    p.add_argument("--dist", required=True)
    p.add_argument("--start", required=True)
    p.add_argument("--stepsize", type=float, default=1e-3)
    p.add_argument("--steps", type=int, default=100)
    p.set_defaults(fn=cmd_leaf)
    return ap


def run(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as err:
        return EXIT_USAGE if err.code else EXIT_OK
    rep = _Reporter(args.format, stdout)
    try:
        code = args.fn(args, rep)
        rep.finish()
        return code
    except FileNotFoundError as err:
        stderr.write(f"error: file not found: {err.filename}\n")
        return EXIT_USAGE
    except (ParseError, ValueError) as err:
        stderr.write(f"error: {err}\n")
        return EXIT_USAGE
    except (RankDeficiencyError, DomainError, ChartDomainError,
            LogBranchError) as err:
        stderr.write(f"numeric failure: {err}\n")
        return EXIT_NUMERIC
    except SdgError as err:
        stderr.write(f"error: {err}\n")
        return EXIT_NUMERIC


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
