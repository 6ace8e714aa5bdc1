"""Command line: ``specwass space|dist|verify``.

Exit codes: 0 success, 1 verification or computation failure, 2 usage
error. Output is JSON unless ``--csv`` is given; wall time is reported only
with ``--timing`` so that repeated runs are byte-identical.
"""
import argparse
import csv
import json
import os
import sys
import time
from fractions import Fraction

import numpy as np

from . import closedform, io, ncgeom, solver
from .core import (
    CostMatrix,
    TwoSheetSpace,
    build_grid_circle,
    build_grid_line,
    build_two_sheet,
    validate_metric,
)
from .errors import (
    DualityGapError,
    HypothesisError,
    MetricError,
    SolverError,
    SpecwassError,
    UnsupportedSpaceError,
)
from .suites import run_suite, twosheet_table

DEFAULT_TOL = 1e-9


class UsageError(Exception):
    pass


def default_tol():
    raw = os.environ.get("SPECWASS_TOL")
    if raw is None:
        return DEFAULT_TOL
    try:
        return float(raw)
    except ValueError:
        raise UsageError(f"SPECWASS_TOL={raw!r} is not a number") from None


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()] if x.dtype != object else [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _emit(rows, as_csv, out=None):
    """JSON object (one row) / JSON lines, or CSV with a header."""
    out = out or sys.stdout
    rows = [_jsonable(r) for r in rows]
    if as_csv:
        keys = []
        for r in rows:
            for k in r:
                if k not in keys:
                    keys.append(k)
        w = csv.DictWriter(out, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()})
        return
    for r in rows:
        out.write(json.dumps(r, sort_keys=False) + "\n")


# ---------------------------------------------------------------------------
# space


def cmd_space(args):
    if args.sub == "gen-line":
        sp = build_grid_line(args.n, args.a, args.b)
    elif args.sub == "gen-circle":
        sp = build_grid_circle(args.n)
    elif args.sub == "gen-twosheet":
        base = io.load_space(args.base)
        higgs = io.load_higgs_csv(args.higgs, base) if args.higgs else None
        sp = build_two_sheet(base, args.norm_di, args.fiber, higgs=higgs, reach=args.reach)
    else:
        return _validate(args)
    if args.output:
        io.save_space(sp, args.output)
    summary = {"kind": args.sub, "points": sp.n, "output": args.output}
    if isinstance(sp, TwoSheetSpace):
        i = 0
        jump = sp.distance(sp.node(i, 0), sp.node(i, sp.fiber_points - 1))
        summary.update(base_points=sp.base.n, fiber_points=sp.fiber_points, jump_distance=jump)
    else:
        summary["valid"] = not validate_metric(sp.dist)
    _emit([summary], args.csv)
    return 0


def _validate(args):
    with open(args.file) as fh:
        obj = json.load(fh)
    sp = io.space_from_dict(obj, validate=False)
    report = validate_metric(sp.dist, args.tol_metric)
    rows = [{"axiom": v.axiom, "index": list(v.index), "excess": float(v.excess)} for v in report]
    _emit([{"file": args.file, "points": sp.n, "valid": not report, "violations": rows}], args.csv)
    return 0 if not report else 1


# ---------------------------------------------------------------------------
# dist


def _load_pair(args, need_nu=True):
    if not args.space and not args.mu:
        raise UsageError("--mu (and --space or a space reference in the file) is required")
    space = io.load_space(args.space) if args.space else None
    mu = io.load_distribution(args.mu, space)
    nu = None
    if need_nu:
        if not args.nu:
            raise UsageError("--nu is required")
        nu = io.load_distribution(args.nu, mu.space)
    return mu, nu


def _vector(text):
    return [float(s) for s in text.split(",")]


def _num(x):
    """Fractions stay exact (serialised as "p/q"); everything else is a float."""
    return x if isinstance(x, Fraction) else float(x)


def cmd_dist(args):
    tol = args.tol
    m = args.method
    cert = None
    extra = {}
    exact = True if args.exact else None
    t0 = time.perf_counter()
    if m in ("primal", "dual", "both", "jump"):
        mu, nu = _load_pair(args)
        if m == "jump":
            if args.norm_di is None:
                raise UsageError("jump needs --norm-di")
            cost = ncgeom.jump_cost(mu.space, ncgeom.JumpCostParams(args.norm_di, args.shift))
            # the jump cost is irrational; stay in floats unless asked
            r = solver.solve_jump(cost, mu, nu, exact=bool(args.exact))
            value = r.plan.value
            cert = {"single_potential_gap": _num(r.gap)}
        else:
            cost = CostMatrix.from_space(mu.space)
            if m == "primal":
                value = solver.solve_primal(cost, mu, nu, exact=exact).value
            elif m == "dual":
                pot = solver.solve_dual(cost, mu, nu, exact=exact)
                value = pot.value
                cert = {"potential": [_num(f) for f in pot.f], "anchor": pot.anchor}
            else:
                r = solver.solve(cost, mu, nu, exact=exact, check=False)
                gap = r.plan.value - r.potential.value
                value = r.plan.value
                cert = {"gap": _num(gap), "dual_value": _num(r.potential.value)}
                if abs(gap) > tol * max(1, abs(value)):
                    raise DualityGapError(f"duality gap {float(gap)!r} exceeds tolerance {tol}")
    elif m == "closed1d":
        mu, nu = _load_pair(args)
        try:
            value = closedform.wasserstein_1d(mu, nu)
        except UnsupportedSpaceError as exc:
            raise UsageError(f"closed1d: {exc}") from None
    elif m == "expect":
        mu, _ = _load_pair(args, need_nu=False)
        if args.x is None:
            raise UsageError("expect needs --x (point id or index)")
        x = int(args.x) if args.x.lstrip("-").isdigit() else args.x
        value = closedform.distance_to_pure(x, mu)
    elif m == "bounds":
        mu, nu = _load_pair(args)
        try:
            lower = closedform.barycenter_lower_bound(mu, nu)
        except HypothesisError as exc:
            raise UsageError(f"bounds: {exc}") from None
        upper = closedform.product_upper_bound(mu, nu)
        value = solver.solve_primal(CostMatrix.from_space(mu.space), mu, nu, exact=exact).value
        extra = {"lower": lower, "upper": _num(upper)}
        if not (lower <= float(value) + tol and float(value) <= float(upper) + tol):
            raise SolverError(f"bound sandwich violated: {lower} <= {float(value)} <= {float(upper)}")
    elif m == "wavepacket":
        if args.x is None or args.y is None:
            raise UsageError("wavepacket needs --x and --y")
        x, y = _vector(args.x), _vector(args.y)
        value = closedform.wavepacket_distance(args.shape, args.sigma, args.sigma_p, x, y, args.quad)
        try:
            h = closedform.optimal_potential(x, y, args.sigma, args.sigma_p)
            cert = {"potential": h.to_dict()}
        except SpecwassError:
            cert = None
    elif m == "moyal":
        if not args.a or not args.b:
            raise UsageError("moyal needs --a x,y,z and --b x,y,z")
        value = ncgeom.moyal_ball_distance(io.parse_bloch(args.a), io.parse_bloch(args.b), args.theta)
    elif m == "equator":
        value = float(ncgeom.equatorial_distance(args.theta1, args.theta2, args.r, args.dD))
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown method {m}")
    report = {"method": "primal+dual" if m == "both" else m, "value": _num(value), "certificate": cert}
    report.update(extra)
    if args.timing:
        report["wall_time_ms"] = round((time.perf_counter() - t0) * 1000.0, 3)
    _emit([report], args.csv)
    return 0


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args):
    tol = args.tol
    if args.suite == "twosheet" and args.table and not args.csv:
        _emit(twosheet_table(args.refine), args.csv)
    passed = failed = 0
    first_bad = None
    rows = []
    for case in run_suite(args.suite, seed=args.seed, cases=args.cases, tol=tol, refine=args.refine):
        if case.ok:
            passed += 1
        else:
            failed += 1
            if first_bad is None:
                first_bad = case
        rows.append({"suite": case.suite, "case": case.index, "pass": case.ok, **case.detail})
        if not args.csv and not args.quiet:
            sys.stdout.write(f"{case.suite:9s} case {case.index:4d} {'pass' if case.ok else 'FAIL'}\n")
    if args.csv:
        _emit(rows, True)
    summary = {"suite": args.suite, "seed": args.seed, "passed": passed, "failed": failed, "total": passed + failed}
    if first_bad is not None:
        summary["counterexample"] = {"suite": first_bad.suite, "case": first_bad.index, **first_bad.detail}
    if not args.csv:
        _emit([summary], False)
    return 0 if failed == 0 else 1


# ---------------------------------------------------------------------------


def build_parser():
    tol = default_tol()
    p = argparse.ArgumentParser(prog="specwass", description="Wasserstein-1 distances on finite metric spaces.")
    p.add_argument("--csv", action="store_true", help="CSV instead of JSON")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("space", help="generate or validate space files")
    ssub = sp.add_subparsers(dest="sub", required=True)
    g = ssub.add_parser("gen-line")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--a", type=float, default=0.0)
    g.add_argument("--b", type=float, default=1.0)
    g = ssub.add_parser("gen-circle")
    g.add_argument("--n", type=int, required=True)
    g = ssub.add_parser("gen-twosheet")
    g.add_argument("--base", required=True)
    g.add_argument("--norm-di", type=float, required=True)
    g.add_argument("--fiber", type=int, required=True)
    g.add_argument("--higgs", help="CSV of point_id,value")
    g.add_argument("--reach", type=float)
    for name in ("gen-line", "gen-circle", "gen-twosheet"):
        ssub.choices[name].add_argument("-o", "--output")
    g = ssub.add_parser("validate")
    g.add_argument("file")
    g.add_argument("--tol-metric", type=float, default=1e-12)
    for c in ssub.choices.values():
        c.add_argument("--csv", action="store_true", default=argparse.SUPPRESS)

    d = sub.add_parser("dist", help="compute one distance")
    d.add_argument(
        "method",
        choices=["primal", "dual", "both", "closed1d", "expect", "bounds", "wavepacket", "moyal", "equator", "jump"],
    )
    d.add_argument("--space")
    d.add_argument("--mu")
    d.add_argument("--nu")
    d.add_argument("--exact", action="store_true", help="rational arithmetic")
    d.add_argument("--x", help="point (expect) or centre vector x1,x2,.. (wavepacket)")
    d.add_argument("--y")
    d.add_argument("--shape", default="gauss")
    d.add_argument("--sigma", type=float, default=1.0)
    d.add_argument("--sigma-p", type=float, default=1.0)
    d.add_argument("--quad", type=int, default=closedform.DEFAULT_QUADRATURE)
    d.add_argument("--a")
    d.add_argument("--b")
    d.add_argument("--theta", type=float, default=1.0)
    d.add_argument("--theta1", type=float, default=0.0)
    d.add_argument("--theta2", type=float, default=0.0)
    d.add_argument("--r", type=float, default=1.0)
    d.add_argument("--dD", type=float, default=1.0)
    d.add_argument("--norm-di", type=float)
    d.add_argument("--shift", choices=list(ncgeom.SHIFT_MODES), default="none")
    d.add_argument("--tol", type=float, default=tol)
    d.add_argument("--timing", action="store_true")
    d.add_argument("--csv", action="store_true", default=argparse.SUPPRESS)

    v = sub.add_parser("verify", help="run randomised property suites")
    v.add_argument(
        "suite",
        choices=["duality", "oracle", "sandwich", "interp", "closed1d", "pure", "twosheet", "moyal", "midpoint", "all"],
    )
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--cases", type=int, default=100)
    v.add_argument("--tol", type=float, default=tol)
    v.add_argument("--refine", type=int, default=4)
    v.add_argument("--table", action="store_true", help="print the twosheet convergence table first")
    v.add_argument("--quiet", action="store_true", help="summary only")
    v.add_argument("--csv", action="store_true", default=argparse.SUPPRESS)
    return p


def main(argv=None):
    try:
        parser = build_parser()
    except UsageError as exc:
        sys.stderr.write(f"specwass: {exc}\n")
        return 2
    args = parser.parse_args(argv)
    handler = {"space": cmd_space, "dist": cmd_dist, "verify": cmd_verify}[args.command]
    try:
        return handler(args)
    except UsageError as exc:
        sys.stderr.write(f"specwass: usage: {exc}\n")
        return 2
    except MetricError as exc:
        sys.stderr.write(f"specwass: {exc}\n")
        for v in exc.report[:20]:
            sys.stderr.write(f"  {v.axiom} at {v.index}: excess {float(v.excess):.3g}\n")
        return 1
    except (SpecwassError, OSError, json.JSONDecodeError, KeyError) as exc:
        sys.stderr.write(f"specwass: {type(exc).__name__}: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
