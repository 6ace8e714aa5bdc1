"""Finite metric spaces, costs, distributions and the two-sheet product grid."""
from collections import namedtuple
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels
from .errors import (
    DegenerateError,
    DistributionError,
    MetricError,
    ParameterError,
    ShapeError,
    SizeError,
    UnsupportedSpaceError,
)

__all__ = [
    "Point",
    "Violation",
    "FiniteMetricSpace",
    "CostMatrix",
    "Distribution",
    "TwoSheetState",
    "TwoSheetSpace",
    "validate_metric",
    "build_grid_line",
    "build_grid_circle",
    "build_two_sheet",
    "barycenter",
    "first_moment",
    "discretize_density",
    "as_exact",
]

METRIC_TOL = 1e-12
SIMPLEX_TOL = 1e-12


def as_exact(x):
    """Object array of Fractions holding exactly the values of ``x``."""
    arr = np.asarray(x)
    if arr.dtype == object:
        return np.vectorize(Fraction, otypes=[object])(arr) if arr.size else arr.copy()
    out = np.empty(arr.shape, dtype=object)
    flat = out.reshape(-1)
    for k, val in enumerate(arr.reshape(-1).tolist()):
        flat[k] = Fraction(val)
    return out


def _frozen(arr):
    arr = np.array(arr, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Point:
    id: str
    coords: Optional[tuple] = None


Violation = namedtuple("Violation", ["axiom", "index", "excess"])
Violation.__doc__ = """One failed metric axiom.

``axiom`` is one of ``"diagonal"``, ``"nonnegativity"``, ``"symmetry"``,
``"triangle"``. ``index`` is ``(i,)``, ``(i, j)`` or ``(i, j, k)``; for the
triangle axiom ``dist[i][k] > dist[i][j] + dist[j][k]``.
"""


def validate_metric(m, tol=METRIC_TOL, limit=50):
    """Check the metric axioms and return the list of violations.

    The list is empty iff the matrix is a metric within ``tol`` (absolute).
    At most ``limit`` witnesses are reported per axiom.
    """
    D = np.asarray(m)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ShapeError(f"metric matrix must be square, got shape {D.shape}")
    n = D.shape[0]
    report = []

    diag = np.abs(np.array([D[i, i] for i in range(n)], dtype=object if D.dtype == object else float))
    for i in np.flatnonzero(diag > tol)[:limit]:
        report.append(Violation("diagonal", (int(i),), diag[i]))

    neg = np.argwhere(D < -tol)[:limit]
    for i, j in neg:
        report.append(Violation("nonnegativity", (int(i), int(j)), -D[i, j]))

    asym = np.argwhere(np.triu(np.abs(D - D.T) > tol, k=1))[:limit]
    for i, j in asym:
        report.append(Violation("symmetry", (int(i), int(j)), abs(D[i, j] - D[j, i])))

    found = 0
    for j in range(n):
        if found >= limit:
            break
        excess = D - (D[:, j, None] + D[None, j, :])
        for i, k in np.argwhere(excess > tol):
            if found >= limit:
                break
            report.append(Violation("triangle", (int(i), j, int(k)), excess[i, k]))
            found += 1
    return report


class FiniteMetricSpace:
    """Labelled points with a validated distance matrix.

    Instances are immutable; the distance matrix is read-only. Builders that
    produce a metric by construction pass ``validate=False`` to skip the
    O(n^3) triangle check.
    """

    def __init__(self, points: Sequence[Point], dist=None, *, validate=True, tol=METRIC_TOL):
        points = tuple(p if isinstance(p, Point) else Point(str(p)) for p in points)
        ids = [p.id for p in points]
        if len(set(ids)) != len(ids):
            raise ParameterError("point ids must be unique")
        with_coords = [p.coords is not None for p in points]
        if any(with_coords):
            if not all(with_coords):
                raise ParameterError("either every point carries coords or none does")
            dims = {len(p.coords) for p in points}
            if len(dims) != 1:
                raise ParameterError("all coords must have the same dimension")
        self._points = points
        self._index = {pid: k for k, pid in enumerate(ids)}
        if dist is not None:
            D = np.asarray(dist)
            if D.dtype != object:
                D = D.astype(np.float64)
            if D.shape != (len(points), len(points)):
                raise ShapeError(f"distance matrix shape {D.shape} does not match {len(points)} points")
            if validate:
                report = validate_metric(D, tol)
                if report:
                    raise MetricError(f"not a metric: {report[0]}", report)
            self._dist = _frozen(D)

    @property
    def points(self):
        return self._points

    @property
    def dist(self):
        return self._dist

    @property
    def n(self):
        return len(self._points)

    def __len__(self):
        return self.n

    @property
    def ids(self):
        return [p.id for p in self._points]

    @property
    def coords(self):
        """``(n, k)`` float array, or ``None`` when the space has no embedding."""
        if self._points[0].coords is None:
            return None
        return np.array([p.coords for p in self._points], dtype=np.float64)

    def index(self, key):
        """Position of a point given its id or an integer index."""
        if isinstance(key, (int, np.integer)):
            if not 0 <= key < self.n:
                raise IndexError(f"point index {key} out of range for {self.n} points")
            return int(key)
        try:
            return self._index[key]
        except KeyError:
            raise KeyError(f"no point with id {key!r}") from None

    def is_euclidean(self, tol=1e-9):
        """True when ``dist`` equals the Euclidean distance between coords."""
        X = self.coords
        if X is None:
            return False
        E = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(-1))
        D = np.asarray(self.dist, dtype=np.float64)
        return bool(np.all(np.abs(D - E) <= tol * np.maximum(1.0, E)))

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n})"


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """Nonnegative cost, possibly positive on the diagonal.

    ``metric`` records that the cost is known to satisfy the metric axioms
    (e.g. it was read off a validated space); the dual solver then skips the
    shortest-path closure.
    """

    cost: np.ndarray
    vanishing_diagonal: bool = True
    metric: bool = False

    def __post_init__(self):
        C = np.asarray(self.cost)
        if C.dtype != object:
            C = C.astype(np.float64)
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise ShapeError(f"cost must be square, got shape {C.shape}")
        if np.any(C < 0):
            raise ParameterError("cost entries must be nonnegative")
        if self.vanishing_diagonal and any(C[i, i] != 0 for i in range(C.shape[0])):
            raise ParameterError("vanishing_diagonal is set but the diagonal is nonzero")
        object.__setattr__(self, "cost", _frozen(C))

    @classmethod
    def from_space(cls, space: FiniteMetricSpace):
        return cls(space.dist, vanishing_diagonal=True, metric=True)

    @property
    def n(self):
        return self.cost.shape[0]

    @cached_property
    def exact_cost(self):
        """Fraction copy of ``cost``, built once per matrix."""
        return _frozen(as_exact(self.cost))


class Distribution:
    """Probability weights over the points of a space.

    Weights may be floats or :class:`~fractions.Fraction` objects; the
    latter keep the downstream arithmetic exact.
    """

    def __init__(self, space: FiniteMetricSpace, weights, tol=METRIC_TOL):
        w = np.asarray(weights)
        if w.dtype != object:
            w = w.astype(np.float64)
        if w.shape != (space.n,):
            raise ShapeError(f"expected {space.n} weights, got shape {w.shape}")
        if np.any(w < 0):
            raise DistributionError("weights must be nonnegative")
        if abs(w.sum() - 1) > tol:
            raise DistributionError(f"weights sum to {float(w.sum())!r}, not 1")
        self.space = space
        self.weights = _frozen(w)

    @classmethod
    def point_mass(cls, space, key, exact=False):
        w = np.zeros(space.n, dtype=object if exact else np.float64)
        if exact:
            w[:] = Fraction(0)
            w[space.index(key)] = Fraction(1)
        else:
            w[space.index(key)] = 1.0
        return cls(space, w)

    @classmethod
    def uniform(cls, space, exact=False):
        if exact:
            return cls(space, np.array([Fraction(1, space.n)] * space.n, dtype=object))
        return cls(space, np.full(space.n, 1.0 / space.n))

    @property
    def exact(self):
        return self.weights.dtype == object

    @property
    def support(self):
        return np.flatnonzero(self.weights != 0)

    def __repr__(self):
        return f"Distribution(n={self.space.n}, support={len(self.support)})"


@dataclass(frozen=True, eq=False)
class TwoSheetState:
    """A couple of measures ``(mu, nu)`` on the two copies of a base space."""

    mu: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu)
        nu = np.asarray(self.nu)
        if mu.dtype != object:
            mu = mu.astype(np.float64)
        if nu.dtype != object:
            nu = nu.astype(np.float64)
        if mu.shape != nu.shape or mu.ndim != 1:
            raise ShapeError("mu and nu must be vectors of equal length")
        if np.any(mu < 0) or np.any(nu < 0):
            raise DistributionError("sheet weights must be nonnegative")
        if abs(mu.sum() + nu.sum() - 1) > METRIC_TOL:
            raise DistributionError("total mass over both sheets must be 1")
        object.__setattr__(self, "mu", _frozen(mu))
        object.__setattr__(self, "nu", _frozen(nu))


# ---------------------------------------------------------------------------
# builders


def build_grid_line(n, a, b):
    """``n`` equispaced points on ``[a, b]`` with ``dist = |x_i - x_j|``."""
    if n < 2:
        raise SizeError("a line grid needs at least 2 points")
    if not a < b:
        raise ParameterError("need a < b")
    x = np.linspace(a, b, n)
    pts = [Point(f"x{i}", (float(x[i]),)) for i in range(n)]
    return FiniteMetricSpace(pts, np.abs(x[:, None] - x[None, :]), validate=False)


def build_grid_circle(n):
    """``n`` equispaced points on the circle of circumference 1.

    ``dist = min(|s_i - s_j|, 1 - |s_i - s_j|)`` with ``s_i = i / n``. The
    coords are the planar embedding of radius ``1 / (2 pi)``; they are a
    chord embedding, so the space is deliberately *not* Euclidean.
    """
    if n < 3:
        raise SizeError("a circle grid needs at least 3 points")
    s = np.arange(n) / n
    gap = np.abs(s[:, None] - s[None, :])
    D = np.minimum(gap, 1.0 - gap)
    r = 1.0 / (2.0 * np.pi)
    pts = [
        Point(f"s{i}", (r * float(np.cos(2 * np.pi * s[i])), r * float(np.sin(2 * np.pi * s[i]))))
        for i in range(n)
    ]
    return FiniteMetricSpace(pts, D, validate=False)


class TwoSheetSpace(FiniteMetricSpace):
    """Geodesic distance on the grid ``base x {0, ..., m-1}``.

    Level ``t`` sits at fiber coordinate ``t / (m - 1)``; the fiber has
    metric component ``profile(x)^2`` so the vertical length of one level
    step at ``x`` is ``1 / ((m - 1) * profile(x))``. Without a Higgs profile
    ``profile = norm_DI`` everywhere and the two extreme levels (the sheets)
    sit ``1 / norm_DI`` apart.

    Edges: every base pair within a level (weight ``base.dist``), every base
    pair between adjacent levels (cell sides and diagonals), and every pair
    further apart whose straight length is at most ``reach``. Distances are
    computed on demand from each source by Dijkstra; ``dist`` materialises
    the full matrix and is only sensible for small grids.

    Node ``level * base.n + i`` is base point ``i`` on ``level``.
    """

    def __init__(self, base, norm_DI, fiber_points, higgs=None, reach=None):
        if not norm_DI > 0:
            raise ParameterError("norm_DI must be positive")
        if fiber_points < 2:
            raise SizeError("fiber_points must be at least 2")
        if base.dist.dtype == object:
            base = FiniteMetricSpace(base.points, np.asarray(base.dist, dtype=np.float64), validate=False)
        if higgs is None:
            profile = np.full(base.n, float(norm_DI))
        else:
            profile = np.asarray(higgs, dtype=np.float64)
            if profile.shape != (base.n,):
                raise ShapeError("higgs profile needs one value per base point")
            if np.any(profile <= 0):
                raise ParameterError("higgs profile values must be positive")
        self.base = base
        self.norm_DI = float(norm_DI)
        self.fiber_points = int(fiber_points)
        self.profile = _frozen(profile)
        self.inv_profile = _frozen(1.0 / profile)
        self.fiber_length = float(np.max(self.inv_profile))
        self.reach = 0.25 * self.fiber_length if reach is None else float(reach)
        self.max_offset = kernels.fiber_reach_levels(self.inv_profile, self.fiber_points, self.reach)
        self._base_dist = np.ascontiguousarray(base.dist, dtype=np.float64)
        self._rows = {}

        m = self.fiber_points
        bc = base.coords
        pts = []
        for t in range(m):
            for i, p in enumerate(base.points):
                coords = None
                if bc is not None:
                    coords = tuple(bc[i]) + (t / (m - 1) / self.norm_DI,)
                pts.append(Point(f"{p.id}@{t}", coords))
        super().__init__(pts, None)

    @property
    def levels(self):
        return self.fiber_points

    def node(self, base_index, level):
        if not 0 <= level < self.fiber_points:
            raise IndexError(f"level {level} out of range")
        return level * self.base.n + self.base.index(base_index)

    def sheet_nodes(self, sheet):
        """Node indices of sheet 0 (level 0) or sheet 1 (top level)."""
        level = 0 if sheet == 0 else self.fiber_points - 1
        return np.arange(self.base.n) + level * self.base.n

    def distances_from(self, node):
        """Geodesic distances from ``node`` to every grid node (cached)."""
        node = int(node)
        row = self._rows.get(node)
        if row is None:
            row = kernels.grid_geodesic(
                self._base_dist, self.inv_profile, self.fiber_points, self.reach, self.max_offset, node
            )
            # Leaving a level only adds length, so within the level the
            # geodesic is the base metric; write it exactly instead of
            # keeping a path sum that may round an ulp low.
            n = self.base.n
            level, i = divmod(node, n)
            row[level * n:(level + 1) * n] = self._base_dist[i]
            if np.all(self.profile == self.profile[0]):
                # constant fiber: the vertical segment is the geodesic
                steps = np.abs(np.arange(self.fiber_points) - level)
                row[i::n] = (steps / (self.fiber_points - 1)) / self.profile[0]
            row.flags.writeable = False
            self._rows[node] = row
        return row

    def distance(self, a, b):
        return float(self.distances_from(a)[int(b)])

    @cached_property
    def _full(self):
        D = np.empty((self.n, self.n))
        for s in range(self.n):
            D[s] = self.distances_from(s)
        # Dijkstra from either end can round differently
        D = np.minimum(D, D.T)
        D.flags.writeable = False
        return D

    @property
    def dist(self):
        return self._full

    def submatrix(self, rows, cols):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        return np.array([self.distances_from(r)[cols] for r in rows]).reshape(len(rows), len(cols))


def build_two_sheet(base, norm_DI, fiber_points, higgs=None, reach=None):
    """Product grid ``base x I`` with fiber length ``1 / norm_DI``.

    ``higgs`` optionally replaces the constant ``norm_DI`` by a per-point
    profile (the fluctuated ``|D_I + H(x)|``). ``reach`` bounds the length of
    multi-level edges; it defaults to a quarter of the longest fiber.
    """
    return TwoSheetSpace(base, norm_DI, fiber_points, higgs=higgs, reach=reach)


# ---------------------------------------------------------------------------
# moments


def barycenter(d: Distribution):
    """Weighted mean of the embedding coordinates."""
    X = d.space.coords
    if X is None:
        raise UnsupportedSpaceError("barycenter needs a space with coords")
    w = np.asarray(d.weights, dtype=np.float64)
    return w @ X


def first_moment(d: Distribution, x0_index):
    """``sum_i w_i dist(x0, i)``; exact when the weights are Fractions."""
    i0 = d.space.index(x0_index)
    row = d.space.dist[i0] if not isinstance(d.space, TwoSheetSpace) else d.space.distances_from(i0)
    if d.exact:
        return sum((w * r for w, r in zip(d.weights, as_exact(row)) if w != 0), Fraction(0))
    return float(np.dot(d.weights, np.asarray(row, dtype=np.float64)))


def discretize_density(shape: Callable, grid: FiniteMetricSpace):
    """Sample a density at the nodes of a line grid and renormalise.

    Each node stands for its own cell (midpoint rule), so the weights are
    ``shape(x_i)`` up to a common factor.
    """
    X = grid.coords
    if X is None or X.shape[1] != 1:
        raise UnsupportedSpaceError("discretize_density needs a 1-D line grid")
    vals = np.asarray(shape(X[:, 0]), dtype=np.float64)
    if vals.shape != (grid.n,):
        vals = np.broadcast_to(vals, (grid.n,)).astype(np.float64)
    if np.any(vals < 0) or not np.all(np.isfinite(vals)):
        raise ParameterError("density must be finite and nonnegative on the grid")
    total = vals.sum()
    if total <= 0:
        raise DegenerateError("density vanishes at every grid node")
    return Distribution(grid, vals / total)
