"""Randomised property suites behind ``specwass verify``.

Each suite takes a :class:`~specwass._random.SplitMix64` seed, a case count
and a tolerance and yields :class:`Case` records in case order. Case ``k``
draws from its own spawned stream, so results do not depend on how many
cases run before it.
"""
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._random import SplitMix64
from .closedform import (
    barycenter_lower_bound,
    distance_to_pure,
    interpolate,
    product_upper_bound,
    wasserstein_1d,
)
from .core import CostMatrix, Distribution, FiniteMetricSpace, Point, build_grid_line, build_two_sheet
from .ncgeom import BlochState, equatorial_distance, midpoint_defect, moyal_ball_distance, two_sheet_pure_distance
from .solver import oracle_enumerate, solve, solve_primal

__all__ = ["Case", "SUITES", "run_suite", "random_distribution", "random_plane_space"]


@dataclass
class Case:
    suite: str
    index: int
    ok: bool
    detail: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# generators


def random_plane_space(rng, n, integer=False):
    """``n`` distinct points in the plane with their Euclidean metric.

    ``integer`` uses lattice points and the L1 metric, whose entries are
    integers (exact in rational mode).
    """
    seen = set()
    pts = []
    while len(pts) < n:
        if integer:
            p = (int(rng.integers(0, 12)), int(rng.integers(0, 12)))
        else:
            p = (round(rng.random(), 12), round(rng.random(), 12))
        if p not in seen:
            seen.add(p)
            pts.append(p)
    X = np.array(pts, dtype=np.float64)
    if integer:
        D = np.abs(X[:, None, :] - X[None, :, :]).sum(-1)
        D = np.array([[Fraction(int(v)) for v in row] for row in D], dtype=object)
        points = [Point(f"p{i}") for i in range(n)]
    else:
        D = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(-1))
        points = [Point(f"p{i}", tuple(X[i])) for i in range(n)]
    return FiniteMetricSpace(points, D, validate=False)


def random_distribution(rng, space, max_support=None, exact=False):
    n = space.n
    k = 1 + int(rng.integers(0, min(n, max_support or n)))
    idx = rng.choice(n, k)
    if exact:
        raw = [int(rng.integers(1, 10)) for _ in range(k)]
        tot = sum(raw)
        w = np.array([Fraction(0)] * n, dtype=object)
        for i, r in zip(idx, raw):
            w[i] = Fraction(r, tot)
    else:
        w = np.zeros(n)
        w[idx] = 0.05 + rng.random(k)
        w /= w.sum()
    return Distribution(space, w)


def _rel(gap, value):
    return abs(gap) / max(1.0, abs(float(value)))


# ---------------------------------------------------------------------------
# suites


def suite_duality(rng, cases, tol):
    for k in range(cases):
        r = rng.spawn(k)
        sp = random_plane_space(r, 2 + int(r.integers(0, 19)))
        a, b = random_distribution(r, sp), random_distribution(r, sp)
        res = solve(CostMatrix.from_space(sp), a, b, check=False)
        gap = float(res.plan.value - res.potential.value)
        viol = res.potential.check_feasible(sp.dist)
        ok = _rel(gap, res.plan.value) <= tol and viol <= tol
        yield Case("duality", k, ok, {"n": sp.n, "primal": float(res.plan.value), "gap": gap, "violation": viol})


def suite_oracle(rng, cases, tol):
    for k in range(cases):
        r = rng.spawn(k)
        sp = random_plane_space(r, 2 + int(r.integers(0, 7)), integer=True)
        a = random_distribution(r, sp, 4, exact=True)
        b = random_distribution(r, sp, 4, exact=True)
        c = CostMatrix.from_space(sp)
        v = solve_primal(c, a, b).value
        o = oracle_enumerate(c, a, b)
        yield Case("oracle", k, v == o, {"n": sp.n, "solver": str(v), "oracle": str(o)})


def suite_sandwich(rng, cases, tol):
    for k in range(cases):
        r = rng.spawn(k)
        side = 2 + int(r.integers(0, 4))
        h = 1.0 / side
        pts = [Point(f"g{i}_{j}", (i * h, j * h)) for i in range(side + 1) for j in range(side + 1)]
        X = np.array([p.coords for p in pts])
        sp = FiniteMetricSpace(pts, np.sqrt(((X[:, None] - X[None]) ** 2).sum(-1)), validate=False)
        a, b = random_distribution(r, sp, 6), random_distribution(r, sp, 6)
        w = float(solve_primal(CostMatrix.from_space(sp), a, b).value)
        lo, up = barycenter_lower_bound(a, b), product_upper_bound(a, b)
        ok = lo <= w + tol and w <= up + tol
        yield Case("sandwich", k, ok, {"lower": lo, "value": w, "upper": up})


def suite_interp(rng, cases, tol):
    for k in range(cases):
        r = rng.spawn(k)
        sp = random_plane_space(r, 3 + int(r.integers(0, 10)))
        m0, m1 = random_distribution(r, sp), random_distribution(r, sp)
        s, t = r.random(), r.random()
        c = CostMatrix.from_space(sp)
        w01 = float(solve_primal(c, m0, m1).value)
        wst = float(solve_primal(c, interpolate(m0, m1, s), interpolate(m0, m1, t)).value)
        err = abs(wst - abs(s - t) * w01)
        yield Case("interp", k, err <= tol, {"s": s, "t": t, "W01": w01, "Wst": wst, "error": err})


def suite_closed1d(rng, cases, tol):
    for k in range(cases):
        r = rng.spawn(k)
        sp = build_grid_line(3 + int(r.integers(0, 30)), 0.0, float(1 + r.integers(0, 5)))
        a, b = random_distribution(r, sp), random_distribution(r, sp)
        w = float(solve_primal(CostMatrix.from_space(sp), a, b).value)
        c = float(wasserstein_1d(a, b))
        yield Case("closed1d", k, abs(w - c) <= tol, {"solver": w, "closed": c})


def suite_pure(rng, cases, tol):
    for k in range(cases):
        r = rng.spawn(k)
        sp = random_plane_space(r, 3 + int(r.integers(0, 10)), integer=True)
        mu = random_distribution(r, sp, exact=True)
        x = int(r.integers(0, sp.n))
        w = solve_primal(CostMatrix.from_space(sp), Distribution.point_mass(sp, x, exact=True), mu).value
        e = distance_to_pure(x, mu)
        yield Case("pure", k, w == e, {"x": x, "solver": str(w), "moment": str(e)})


def twosheet_table(refine=4, norm_DI=1.0, target=0.3):
    """Cross-sheet grid geodesic vs the analytic value under refinement.

    Row ``k`` uses a base line grid and a fiber with ``8 * 2**k + 1`` points;
    the pair is node 0 on sheet 0 and the node nearest ``target`` on sheet 1.
    """
    rows = []
    for k in range(refine + 1):
        n = 8 * 2**k + 1
        base = build_grid_line(n, 0.0, 1.0)
        sp = build_two_sheet(base, norm_DI, n)
        j = int(round(target * (n - 1)))
        d = float(base.dist[0, j])
        exact = two_sheet_pure_distance(d, norm_DI)
        grid = sp.distance(sp.node(0, 0), sp.node(j, n - 1))
        rows.append({"points": n, "base_d": d, "grid": grid, "exact": exact, "rel_error": abs(grid - exact) / exact})
    return rows


def suite_twosheet(rng, cases, tol, refine=4):
    rows = twosheet_table(refine)
    for k, row in enumerate(rows):
        ok = k == 0 or row["rel_error"] < rows[k - 1]["rel_error"]
        if k == len(rows) - 1:
            ok = ok and row["rel_error"] <= 0.02
        yield Case("twosheet", k, ok, row)


def suite_moyal(rng, cases, tol):
    tol = max(tol, 1e-12)

    def ball(r):
        while True:
            v = r.uniform(-1.0, 1.0, 3)
            if v @ v <= 1.0:
                return BlochState(*v)

    for k in range(cases):
        r = rng.spawn(k)
        a, b, c = ball(r), ball(r), ball(r)
        th = 0.1 + 2 * r.random()
        slack = moyal_ball_distance(a, c, th) + moyal_ball_distance(c, b, th) - moyal_ball_distance(a, b, th)
        t1, t2, sh = r.uniform(-10, 10), r.uniform(-10, 10), r.uniform(-10, 10)
        rad, dD = r.random(), 0.1 + r.random()
        rot = abs(float(equatorial_distance(t1 + sh, t2 + sh, rad, dD) - equatorial_distance(t1, t2, rad, dD)))
        ok = slack >= -tol and rot <= tol
        yield Case("moyal", k, ok, {"triangle_slack": slack, "rotation_error": rot})


def suite_midpoint(rng, cases, tol):
    deltas = [0.1, 0.5, 1.0, 2.0, 3.0]
    for k in range(cases):
        d = deltas[k] if k < len(deltas) else 0.1 + (math.pi - 0.1) * rng.spawn(k).random()
        defect = midpoint_defect(0.0, d, 10_000)
        yield Case("midpoint", k, defect > 0, {"delta": d, "defect": defect})


SUITES = {
    "duality": suite_duality,
    "oracle": suite_oracle,
    "sandwich": suite_sandwich,
    "interp": suite_interp,
    "closed1d": suite_closed1d,
    "pure": suite_pure,
    "twosheet": suite_twosheet,
    "moyal": suite_moyal,
    "midpoint": suite_midpoint,
}


def run_suite(name, seed=0, cases=100, tol=1e-9, refine=4):
    """Yield the cases of one suite (or of all of them for ``"all"``)."""
    names = list(SUITES) if name == "all" else [name]
    for nm in names:
        rng = SplitMix64(seed)
        if nm == "twosheet":
            yield from suite_twosheet(rng, cases, tol, refine)
        else:
            yield from SUITES[nm](rng, cases, tol)
