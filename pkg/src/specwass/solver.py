"""Kantorovich primal and dual programs on finite spaces.

Both programs are answered by one run of the transportation simplex in
:mod:`specwass.kernels`: the optimal basis gives the plan, its node prices
give the potential. With a metric cost the potential is the c-transform of
the column prices, which is 1-Lipschitz and attains the primal value, so the
duality gap is zero up to rounding (exactly zero in rational mode).
"""
import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import lcm
from typing import Optional

import numpy as np

from . import kernels
from .core import CostMatrix, Distribution, as_exact
from .errors import (
    DualityGapError,
    PairingError,
    ParameterError,
    ShapeError,
    SizeError,
    SolverError,
)

__all__ = [
    "TransportPlan",
    "DualPotential",
    "SolveResult",
    "solve_primal",
    "solve_dual",
    "solve",
    "solve_jump",
    "duality_gap",
    "oracle_enumerate",
    "transport",
    "EXACT_MAX_SUPPORT",
]

FEAS_TOL = 1e-9
EXACT_MAX_SUPPORT = 64
ORACLE_MAX_SUPPORT = 5


def _fingerprint(cost, w1, w2):
    h = hashlib.blake2b(digest_size=16)
    for arr in (cost, w1, w2):
        arr = np.asarray(arr)
        h.update(str(arr.shape).encode())
        if arr.dtype == object:
            h.update(repr([Fraction(x) for x in arr.reshape(-1)]).encode())
        else:
            h.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
    return h.hexdigest()


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """Optimal coupling, stored on the support rows x support columns.

    ``pi`` materialises the full ``n x n`` matrix.
    """

    rows: np.ndarray
    cols: np.ndarray
    block: np.ndarray
    value: object
    n: int
    key: str = field(default="", repr=False)

    @property
    def pi(self):
        out = np.zeros((self.n, self.n), dtype=self.block.dtype)
        if self.block.dtype == object:
            out[:] = Fraction(0)
        out[np.ix_(self.rows, self.cols)] = self.block
        return out

    def marginals(self):
        pi = self.pi
        return pi.sum(axis=1), pi.sum(axis=0)


@dataclass(frozen=True, eq=False)
class DualPotential:
    """Potential ``f`` over every point of the space, gauge ``f[anchor] = 0``."""

    f: np.ndarray
    value: object
    anchor: int
    key: str = field(default="", repr=False)

    def check_feasible(self, cost, tol=FEAS_TOL):
        """Largest violation of ``f[i] - f[j] <= cost[i, j]`` (<= 0 if feasible)."""
        C = cost.cost if isinstance(cost, CostMatrix) else np.asarray(cost)
        f = self.f
        excess = (f[:, None] - f[None, :]) - C
        worst = excess.max()
        return worst if self.f.dtype == object else float(worst)

    def is_feasible(self, cost, tol=FEAS_TOL):
        return self.check_feasible(cost) <= tol


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Primal plan, dual potential and ``gap = plan.value - potential.value``.

    ``pair`` holds the two-sided Kantorovich prices ``(u, v)`` on the
    supports, with ``u[i] + v[j] <= cost[i, j]``; their value always equals
    ``plan.value``, also for costs that are not metrics.
    """

    plan: TransportPlan
    potential: DualPotential
    gap: object
    pair: Optional[tuple] = None
    pivots: int = 0


# ---------------------------------------------------------------------------
# raw transportation problem


def transport(C, a, b):
    """Solve the balanced transportation problem on the dense block ``C``.

    Returns ``(flow_matrix, value, u, v, pivots)``. Float input runs the
    compiled kernel; ``object`` (Fraction) input runs the exact path.
    """
    C = np.ascontiguousarray(C)
    n1, n2 = C.shape
    if a.shape != (n1,) or b.shape != (n2,):
        raise ShapeError("marginals do not match the cost block")
    exact = C.dtype == object
    N = n1 + n2 - 1
    bi = np.zeros(N, dtype=np.int64)
    bj = np.zeros(N, dtype=np.int64)
    if exact:
        zero = Fraction(0)
        flow = np.full(N, zero, dtype=object)
        u = np.full(n1, zero, dtype=object)
        v = np.full(n2, zero, dtype=object)
        eps = zero
    else:
        C = C.astype(np.float64)
        a = np.ascontiguousarray(a, dtype=np.float64)
        b = np.ascontiguousarray(b, dtype=np.float64)
        flow = np.zeros(N)
        u = np.zeros(n1)
        v = np.zeros(n2)
        scale = float(np.max(np.abs(C))) if C.size else 0.0
        eps = 1e-12 * max(1.0, scale)
    status, pivots = kernels.transport_simplex(C, a, b, eps, bi, bj, flow, u, v)
    if status != kernels.OPTIMAL:
        raise SolverError(f"transportation simplex stopped after {pivots} pivots without reaching optimality")
    X = np.zeros((n1, n2), dtype=C.dtype)
    if exact:
        X[:] = Fraction(0)
    for k in range(N):
        X[bi[k], bj[k]] += flow[k]
    if not exact:
        np.maximum(X, 0.0, out=X)
    value = sum((C[bi[k], bj[k]] * flow[k] for k in range(N)), Fraction(0)) if exact else float(np.sum(C * X))
    return X, value, u, v, int(pivots)


# ---------------------------------------------------------------------------
# problem setup


class _Problem:
    def __init__(self, cost, mu1, mu2, exact):
        if not isinstance(cost, CostMatrix):
            cost = CostMatrix(np.asarray(cost), vanishing_diagonal=False)
        n = cost.n
        if mu1.space.n != n or mu2.space.n != n:
            raise ShapeError(f"cost is {n}x{n} but distributions live on {mu1.space.n} and {mu2.space.n} points")
        if exact is None:
            exact = mu1.exact or mu2.exact or cost.cost.dtype == object
        self.exact = bool(exact)
        self.n = n
        self.cost = cost
        self.rows = np.flatnonzero(mu1.weights != 0)
        self.cols = np.flatnonzero(mu2.weights != 0)
        if self.exact:
            if max(len(self.rows), len(self.cols)) > EXACT_MAX_SUPPORT:
                raise SizeError(f"rational mode supports at most {EXACT_MAX_SUPPORT} points per side")
            self.C = cost.exact_cost
            self.w1 = as_exact(mu1.weights)
            self.w2 = as_exact(mu2.weights)
        else:
            self.C = np.asarray(cost.cost, dtype=np.float64)
            self.w1 = np.asarray(mu1.weights, dtype=np.float64)
            self.w2 = np.asarray(mu2.weights, dtype=np.float64)
        self.a = self.w1[self.rows]
        self.b = self.w2[self.cols]
        if self.exact and sum(self.a) != sum(self.b):
            raise ParameterError("rational mode needs both masses exactly equal to 1")
        if not self.exact:
            # balance exactly; the kernel assumes sum(a) == sum(b)
            self.b = self.b * (self.a.sum() / self.b.sum())
        self.key = _fingerprint(cost.cost, mu1.weights, mu2.weights)
        self.anchor = int(min(self.rows[0], self.cols[0]))

    def block(self, C):
        return np.ascontiguousarray(C[np.ix_(self.rows, self.cols)])

    def plan(self, X, value):
        return TransportPlan(self.rows, self.cols, X, value, self.n, self.key)

    def potential_from_prices(self, Cdual, v):
        """c-transform ``f(x) = min_j (Cdual[x, col_j] - v_j)``, gauge-fixed."""
        sub = Cdual[:, self.cols]
        if self.exact:
            f = np.array([min(sub[x, j] - v[j] for j in range(len(self.cols))) for x in range(self.n)], dtype=object)
        else:
            f = (sub - v[None, :]).min(axis=1)
        f = f - f[self.anchor]
        diff = self.w1 - self.w2
        if self.exact:
            value = sum((fi * di for fi, di in zip(f, diff) if di != 0), Fraction(0))
        else:
            value = float(np.dot(f, diff))
        return DualPotential(f, value, self.anchor, self.key)

    def dual_cost(self):
        """Cost seen by the single-potential program.

        ``f[i] - f[j] <= c[i, j]`` for all pairs is equivalent to the same
        constraint against the shortest-path closure of ``c`` with a zero
        diagonal, which is a metric (up to symmetry) and admits c-transforms.
        """
        if self.cost.metric:
            return self.C
        return kernels.metric_closure(self.C)


def _run(cost, mu1, mu2, exact, want_plan=True, want_dual=True):
    p = _Problem(cost, mu1, mu2, exact)
    X, value, u, v, pivots = transport(p.block(p.C), p.a, p.b)
    plan = p.plan(X, value) if want_plan else None
    potential = None
    pair = (u, v)
    if want_dual:
        Cd = p.dual_cost()
        if Cd is p.C:
            potential = p.potential_from_prices(Cd, v)
        else:
            _, _, _, vd, more = transport(p.block(Cd), p.a, p.b)
            pivots += more
            potential = p.potential_from_prices(Cd, vd)
    return p, plan, potential, pair, pivots


def solve_primal(cost, mu1: Distribution, mu2: Distribution, exact=None) -> TransportPlan:
    """Minimal transport cost and an optimal plan.

    Zero-weight points are dropped; the plan is computed on the support
    block. ``exact`` forces (or forbids) rational arithmetic; by default it
    follows the dtype of the inputs.
    """
    return _run(cost, mu1, mu2, exact, want_dual=False)[1]


def solve_dual(cost, mu1: Distribution, mu2: Distribution, exact=None) -> DualPotential:
    """Maximise ``sum f (mu1 - mu2)`` over ``f[i] - f[j] <= cost[i, j]``."""
    p, _, potential, _, _ = _run(cost, mu1, mu2, exact, want_plan=False)
    return potential


def solve(cost, mu1: Distribution, mu2: Distribution, exact=None, check=True) -> SolveResult:
    """Plan, potential and gap from a single simplex run (metric costs).

    With ``check`` the result is passed through :func:`duality_gap`, which
    raises if strong duality is not certified.
    """
    p, plan, potential, pair, pivots = _run(cost, mu1, mu2, exact)
    r = SolveResult(plan, potential, plan.value - potential.value, pair, pivots)
    if check:
        duality_gap(r)
    return r


def solve_jump(cost: CostMatrix, mu1: Distribution, mu2: Distribution, exact=None) -> SolveResult:
    """Transport under a cost that need not vanish on the diagonal.

    Same machinery as :func:`solve`. The dual constraint at ``i == j`` reads
    ``0 <= cost[i, i]`` and holds automatically, so a diagonal cost changes
    the primal value but the single-potential program only sees the
    closure of the cost; ``gap`` is then generally positive and *not*
    checked. ``pair`` carries the two-sided prices, whose value does match
    ``plan.value``.
    """
    p, plan, potential, pair, pivots = _run(cost, mu1, mu2, exact)
    return SolveResult(plan, potential, plan.value - potential.value, pair, pivots)


def duality_gap(r: SolveResult, tol=FEAS_TOL):
    """``plan.value - potential.value``, certified.

    Raises :class:`PairingError` if plan and potential were computed on
    different inputs, :class:`DualityGapError` if
    ``|gap| > tol * max(1, plan.value)``.
    """
    if r.plan.key != r.potential.key:
        raise PairingError("plan and potential come from different inputs")
    gap = r.plan.value - r.potential.value
    if abs(gap) > tol * max(1, abs(r.plan.value)):
        raise DualityGapError(f"duality gap {float(gap)!r} exceeds tolerance (primal {float(r.plan.value)!r})")
    return gap


# ---------------------------------------------------------------------------
# brute-force oracle


@lru_cache(maxsize=None)
def _tree_maps(p, q):
    """Flow maps of every spanning tree of the complete bipartite graph.

    Returns an int8 array ``T`` of shape ``(trees, p*q, p+q)``: the basic
    solution of tree ``t`` is ``T[t] @ concat(a, b)``. Entries are in
    ``{-1, 0, 1}`` because the incidence matrix is totally unimodular.
    """
    edges = [(i, p + j) for i in range(p) for j in range(q)]
    need = p + q - 1
    maps = []

    def find(parent, x):
        while parent[x] != x:
            x = parent[x]
        return x

    def rec(start, chosen, parent):
        if len(chosen) == need:
            maps.append(_eliminate(chosen, p, q))
            return
        if len(edges) - start < need - len(chosen):
            return
        for k in range(start, len(edges)):
            x, y = edges[k]
            rx, ry = find(parent, x), find(parent, y)
            if rx == ry:
                continue
            par = list(parent)
            par[rx] = ry
            chosen.append(k)
            rec(k + 1, chosen, par)
            chosen.pop()

    rec(0, [], list(range(p + q)))
    return np.array(maps, dtype=np.int8)


def _eliminate(chosen, p, q):
    """Leaf elimination with symbolic supplies (unit vectors over a, b)."""
    nn = p + q
    rem = np.eye(nn, dtype=np.int64)
    rem[p:] *= -1  # demands enter with a minus sign
    incident = {v: set() for v in range(nn)}
    for k in chosen:
        i, jj = divmod(k, q)
        incident[i].add(k)
        incident[p + jj].add(k)
    out = np.zeros((p * q, nn), dtype=np.int64)
    live = set(chosen)
    while live:
        leaf = next(v for v in range(nn) if len(incident[v]) == 1)
        (k,) = incident[leaf]
        i, jj = divmod(k, q)
        other = p + jj if leaf == i else i
        sign = 1 if leaf < p else -1
        out[k] = sign * rem[leaf]
        rem[other] += rem[leaf]
        rem[leaf] = 0
        incident[leaf].discard(k)
        incident[other].discard(k)
        live.discard(k)
    return out


def oracle_enumerate(cost, mu1: Distribution, mu2: Distribution):
    """Exact optimum by visiting every vertex of the transport polytope.

    Each vertex is the basic solution of a spanning tree on the support
    bipartite graph (degenerate vertices are trees padded with zero arcs),
    so enumerating trees enumerates vertices. Weights are scaled to integers
    by their common denominator; the cost sum is done in Fractions.
    Independent of the simplex code.
    """
    if isinstance(cost, CostMatrix):
        C = cost.cost
    else:
        C = np.asarray(cost)
    rows = [i for i, w in enumerate(mu1.weights) if w != 0]
    cols = [j for j, w in enumerate(mu2.weights) if w != 0]
    p, q = len(rows), len(cols)
    if p > ORACLE_MAX_SUPPORT or q > ORACLE_MAX_SUPPORT:
        raise SizeError(f"oracle supports at most {ORACLE_MAX_SUPPORT} points per side, got {p} and {q}")
    a = [Fraction(mu1.weights[i]) for i in rows]
    b = [Fraction(mu2.weights[j]) for j in cols]
    if sum(a) != sum(b):
        raise ParameterError("oracle needs exactly balanced masses")
    L = lcm(*(x.denominator for x in a + b))
    s = np.array([int(x * L) for x in a + b], dtype=object)
    T = _tree_maps(p, q)
    if max(s) < 2**40:
        flows = T.astype(np.int64) @ s.astype(np.int64)
    else:
        flows = T.astype(object) @ s
    ok = np.all(flows >= 0, axis=1)
    feasible = np.unique(np.asarray(flows[ok], dtype=object), axis=0) if flows.dtype == object else np.unique(flows[ok], axis=0)
    Cv = [Fraction(C[i, j]) for i in rows for j in cols]
    best = None
    for fl in feasible:
        val = sum((c * int(x) for c, x in zip(Cv, fl) if x), Fraction(0))
        if best is None or val < best:
            best = val
    return best / L


def tree_count(p, q):
    """Spanning trees of the complete bipartite graph K_{p,q}."""
    return p ** (q - 1) * q ** (p - 1)

