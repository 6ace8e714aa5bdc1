"""Closed-form distances, bounds and optimal potentials.

These are the independent oracles the solver is checked against: the 1-D
cumulative formula, distance to a pure state, the product upper bound, the
barycenter lower bound, and the wave-packet distance with the potential
that attains it.
"""
import csv
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .core import Distribution, FiniteMetricSpace, as_exact, barycenter, discretize_density, first_moment
from .errors import (
    DegenerateError,
    HypothesisError,
    NormalizationError,
    ParameterError,
    ShapeError,
    UnsupportedSpaceError,
)

__all__ = [
    "Shape",
    "SHAPES",
    "get_shape",
    "table_shape",
    "WavePacket",
    "CumulativeDifference",
    "Potential",
    "cumulative_difference",
    "wasserstein_1d",
    "distance_to_pure",
    "product_upper_bound",
    "barycenter_lower_bound",
    "wavepacket_distance",
    "optimal_potential",
    "potential_gap",
    "interpolate",
    "discretize_packet",
]

NORM_TOL = 1e-6
DEFAULT_QUADRATURE = 512


# ---------------------------------------------------------------------------
# shapes


@dataclass(frozen=True)
class Shape:
    """A unit-mass density on ``[lo, hi]``.

    ``kinks`` lists interior points where the density is not smooth; the
    quadrature splits there so the midpoint rule keeps its order.
    """

    name: str
    density: Callable
    lo: float
    hi: float
    kinks: tuple = ()

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=np.float64)
        out = np.where((xi >= self.lo) & (xi <= self.hi), self.density(xi), 0.0)
        return out

    def breakpoints(self):
        return tuple(sorted({self.lo, self.hi, *[k for k in self.kinks if self.lo < k < self.hi]}))

    def mass(self, n=DEFAULT_QUADRATURE):
        nodes, w = _midpoint(self.breakpoints(), n)
        return float(np.dot(self(nodes), w))


def _gauss(xi):
    return np.exp(-0.5 * xi * xi) / np.sqrt(2.0 * np.pi)


def _uniform(xi):
    return np.ones_like(xi)


def _triangle(xi):
    return 1.0 - np.abs(xi)


# the Gaussian is cut at 8 sigma; the lost mass is ~1e-15
SHAPES = {
    "gauss": Shape("gauss", _gauss, -8.0, 8.0),
    "uniform": Shape("uniform", _uniform, 0.0, 1.0),
    "triangle": Shape("triangle", _triangle, -1.0, 1.0, (0.0,)),
}


def table_shape(path):
    """Piecewise-linear density from a CSV of ``x,value`` rows."""
    xs, ys = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                x, y = float(row[0]), float(row[1])
            except ValueError:
                continue  # header line
            xs.append(x)
            ys.append(y)
    if len(xs) < 2:
        raise ShapeError(f"{path}: need at least two x,value rows")
    order = np.argsort(xs)
    xs = np.asarray(xs)[order]
    ys = np.asarray(ys)[order]
    if np.any(ys < 0):
        raise ParameterError(f"{path}: density values must be nonnegative")

    def dens(xi, xs=xs, ys=ys):
        return np.interp(xi, xs, ys)

    return Shape(f"table:{path}", dens, float(xs[0]), float(xs[-1]), tuple(float(x) for x in xs[1:-1]))


def get_shape(name):
    """Preset by name, or ``table:<path>``."""
    if isinstance(name, Shape):
        return name
    if name.startswith("table:"):
        return table_shape(name[len("table:"):])
    try:
        return SHAPES[name]
    except KeyError:
        raise ParameterError(f"unknown shape {name!r}; choose from {sorted(SHAPES)} or table:<path>") from None


def _midpoint(breaks, n):
    """Midpoint nodes and weights over consecutive ``breaks``, ~n nodes total."""
    breaks = np.asarray(breaks, dtype=np.float64)
    total = breaks[-1] - breaks[0]
    nodes, weights = [], []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        if hi <= lo:
            continue
        k = max(1, int(round(n * (hi - lo) / total)))
        h = (hi - lo) / k
        nodes.append(lo + h * (np.arange(k) + 0.5))
        weights.append(np.full(k, h))
    return np.concatenate(nodes), np.concatenate(weights)


def _check_normalized(shape, n):
    m = shape.mass(max(n, 4096))
    if abs(m - 1.0) > NORM_TOL:
        raise NormalizationError(f"shape {shape.name!r} integrates to {m!r}, not 1")


@dataclass(frozen=True)
class WavePacket:
    """``shape`` rescaled by ``width`` and centred at ``center``.

    ``width == 0`` is the point mass at ``center``.
    """

    shape: Shape
    center: float
    width: float

    def __post_init__(self):
        if self.width < 0:
            raise ParameterError("width must be nonnegative")

    def density(self, z):
        z = np.asarray(z, dtype=np.float64)
        return self.shape((z - self.center) / self.width) / self.width

    def support(self):
        return self.center + self.width * self.shape.lo, self.center + self.width * self.shape.hi


def discretize_packet(packet: WavePacket, grid: FiniteMetricSpace):
    """Distribution of a 1-D wave packet on a line grid.

    Positive width: midpoint sampling of the density. Zero width: point
    mass at the grid node nearest to the centre.
    """
    if packet.width == 0:
        X = grid.coords[:, 0]
        return Distribution.point_mass(grid, int(np.argmin(np.abs(X - packet.center))))
    return discretize_density(packet.density, grid)


# ---------------------------------------------------------------------------
# 1-D closed form


@dataclass(frozen=True)
class CumulativeDifference:
    """Step function ``Delta(z) = (mu1 - mu2)((-inf, z])``.

    ``delta[k]`` is the value on ``[breakpoints[k], breakpoints[k+1])``; it
    is zero left of the first and right of the last breakpoint.
    """

    breakpoints: np.ndarray
    delta: np.ndarray

    def __call__(self, z):
        k = np.searchsorted(self.breakpoints, z, side="right") - 1
        if k < 0 or k >= len(self.delta):
            return 0 * self.delta[0] if len(self.delta) else 0.0
        return self.delta[k]

    def integral_abs(self):
        """``int |Delta(z)| dz``."""
        widths = np.diff(self.breakpoints)
        terms = [abs(d) * w for d, w in zip(self.delta, widths)]
        return sum(terms[1:], terms[0]) if terms else 0.0


def _atoms(mu):
    """``(positions, weights)`` of a Distribution on a line or of a list of pairs."""
    if isinstance(mu, Distribution):
        X = mu.space.coords
        if X is None or X.shape[1] != 1 or not mu.space.is_euclidean():
            raise UnsupportedSpaceError("the 1-D formula needs points on a line with dist = |x - y|")
        return X[:, 0], mu.weights
    pairs = list(mu)
    if not pairs:
        raise DegenerateError("empty atomic measure")
    pos = np.array([float(x) for x, _ in pairs])
    w = np.array([w for _, w in pairs], dtype=object if any(isinstance(w, Fraction) for _, w in pairs) else np.float64)
    return pos, w


def cumulative_difference(mu1, mu2) -> CumulativeDifference:
    x1, w1 = _atoms(mu1)
    x2, w2 = _atoms(mu2)
    exact = w1.dtype == object or w2.dtype == object
    keep1 = w1 != 0
    keep2 = w2 != 0
    x1, w1, x2, w2 = x1[keep1], w1[keep1], x2[keep2], w2[keep2]
    if len(x1) == 0 or len(x2) == 0:
        raise DegenerateError("empty support")
    pos = np.concatenate([x1, x2])
    if exact:
        pos_e = [Fraction(p) for p in pos]
        jumps = list(as_exact(w1)) + [-x for x in as_exact(w2)]
        order = sorted(range(len(pos_e)), key=lambda k: pos_e[k])
        bps, vals, acc = [], [], Fraction(0)
        for k in order:
            if bps and pos_e[k] == bps[-1]:
                acc += jumps[k]
                vals[-1] = acc
            else:
                acc += jumps[k]
                bps.append(pos_e[k])
                vals.append(acc)
        return CumulativeDifference(np.array(bps, dtype=object), np.array(vals[:-1], dtype=object))
    jumps = np.concatenate([np.asarray(w1, dtype=np.float64), -np.asarray(w2, dtype=np.float64)])
    bps, inv = np.unique(pos, return_inverse=True)
    per = np.zeros(len(bps))
    np.add.at(per, inv, jumps)
    delta = np.cumsum(per)
    return CumulativeDifference(bps, delta[:-1])


def wasserstein_1d(mu1, mu2):
    """``int |Delta(z)| dz`` for atomic measures on a line.

    Accepts Distributions on a line grid or lists of ``(x, weight)`` pairs.
    Fraction weights give a Fraction result (positions are taken exactly).
    """
    return cumulative_difference(mu1, mu2).integral_abs()


# ---------------------------------------------------------------------------
# bounds


def distance_to_pure(x_index, mu: Distribution):
    """Distance from ``mu`` to the point mass at ``x_index``: the first moment."""
    return first_moment(mu, x_index)


def _same_space(mu1, mu2):
    if mu1.space is not mu2.space and mu1.space.n != mu2.space.n:
        raise ShapeError("distributions live on different spaces")


def product_upper_bound(mu1: Distribution, mu2: Distribution):
    """``sum_ij dist[i, j] mu1[i] mu2[j]``, the cost of the independent coupling."""
    _same_space(mu1, mu2)
    D = mu1.space.dist
    if mu1.exact or mu2.exact:
        w1, w2 = as_exact(mu1.weights), as_exact(mu2.weights)
        De = as_exact(D)
        return sum((w1[i] * De[i, j] * w2[j] for i in np.flatnonzero(w1 != 0) for j in np.flatnonzero(w2 != 0)), Fraction(0))
    return float(mu1.weights @ np.asarray(D, dtype=np.float64) @ mu2.weights)


def barycenter_lower_bound(mu1: Distribution, mu2: Distribution, tol=1e-9):
    """``|bary(mu1) - bary(mu2)|``; refuses spaces whose metric is not the
    Euclidean distance of their coords."""
    _same_space(mu1, mu2)
    if mu1.space.coords is None:
        raise UnsupportedSpaceError("barycenter bound needs coords")
    if not mu1.space.is_euclidean(tol):
        raise HypothesisError("dist is not the Euclidean distance of the coords; the barycenter bound does not apply")
    return float(np.linalg.norm(barycenter(mu1) - barycenter(mu2)))


# ---------------------------------------------------------------------------
# wave packets


def _vec(x):
    return np.atleast_1d(np.asarray(x, dtype=np.float64))


def _tensor_midpoint(shape, dim, n, extra=()):
    """Tensor-product midpoint rule for the product density on ``R^dim``."""
    breaks = sorted(set(shape.breakpoints()) | {e for e in extra if shape.lo < e < shape.hi})
    nodes, w = _midpoint(breaks, n)
    dens = shape(nodes) * w
    if dim == 1:
        return nodes[:, None], dens
    grids = np.meshgrid(*([nodes] * dim), indexing="ij")
    pts = np.stack([g.reshape(-1) for g in grids], axis=1)
    weights = np.ones(len(pts))
    for k in range(dim):
        weights = weights * np.meshgrid(*([dens] * dim), indexing="ij")[k].reshape(-1)
    return pts, weights


def wavepacket_distance(psi, sigma, sigma_p, x, y, quadrature_n=DEFAULT_QUADRATURE):
    """``int |x - y + (sigma - sigma') xi| psi(xi) dxi`` by the midpoint rule.

    In several dimensions ``psi`` is the product of the 1-D shape along each
    axis. Equal widths short-circuit to ``|x - y|``. In 1-D the rule is split
    at the kink of the integrand.
    """
    shape = get_shape(psi)
    if sigma < 0 or sigma_p < 0:
        raise ParameterError("widths must be nonnegative")
    if quadrature_n < 64:
        raise ParameterError("quadrature_n must be at least 64")
    _check_normalized(shape, quadrature_n)
    x, y = _vec(x), _vec(y)
    if x.shape != y.shape:
        raise ShapeError("centres must have the same dimension")
    if sigma == sigma_p:
        return float(np.linalg.norm(x - y))
    ds = sigma - sigma_p
    kinks = ()
    if len(x) == 1:
        kinks = (float((y[0] - x[0]) / ds),)
    elif len(x) > 3:
        raise ParameterError("quadrature is tensor-product; at most 3 dimensions")
    n = quadrature_n if len(x) == 1 else max(64, int(round(quadrature_n ** (1.0 / len(x)))) * 4)
    pts, w = _tensor_midpoint(shape, len(x), n, kinks)
    vals = np.linalg.norm((x - y)[None, :] + ds * pts, axis=1)
    return float(np.dot(vals, w))


@dataclass(frozen=True)
class Potential:
    """A 1-Lipschitz function: ``sign * z.direction`` or ``sign * |z - apex|``."""

    kind: str
    direction: Optional[np.ndarray] = None
    apex: Optional[np.ndarray] = None
    sign: float = 1.0

    def __call__(self, z):
        # 1-D potentials take plain scalars / vectors of positions;
        # otherwise z has shape (..., m)
        z = np.asarray(z, dtype=np.float64)
        ref = self.direction if self.kind == "affine" else self.apex
        if len(ref) == 1 and (z.ndim == 0 or z.shape[-1] != 1):
            z = z[..., None]
        if self.kind == "affine":
            return self.sign * (z @ ref)
        return self.sign * np.linalg.norm(z - ref, axis=-1)

    def to_dict(self):
        out = {"kind": self.kind, "sign": self.sign}
        if self.direction is not None:
            out["direction"] = self.direction.tolist()
        if self.apex is not None:
            out["apex"] = (self.apex + 0.0).tolist()
        return out


def optimal_potential(x, y, sigma, sigma_p) -> Potential:
    """Potential attaining the wave-packet distance.

    Equal widths: the affine ``h(z) = z.(x - y)/|x - y|``. Otherwise the
    cone ``h(z) = |z - alpha|`` with ``alpha = (sigma' x - sigma y)/(sigma' - sigma)``,
    negated when ``sigma < sigma'`` so that ``Delta(h)`` is the distance.
    """
    x, y = _vec(x), _vec(y)
    if sigma == sigma_p:
        d = np.linalg.norm(x - y)
        if d == 0:
            raise DegenerateError("identical packets: every potential is optimal, value 0")
        return Potential("affine", direction=(x - y) / d)
    alpha = (sigma_p * x - sigma * y) / (sigma_p - sigma)
    return Potential("cone", apex=alpha, sign=1.0 if sigma > sigma_p else -1.0)


def potential_gap(h: Potential, psi, sigma, sigma_p, x, y, quadrature_n=DEFAULT_QUADRATURE):
    """``Delta(h) = E[h; packet(sigma, x)] - E[h; packet(sigma', y)]``.

    Each expectation is its own quadrature (split at the cone apex), so this
    is an independent check of :func:`wavepacket_distance`.
    """
    shape = get_shape(psi)
    x, y = _vec(x), _vec(y)

    def expect(s, c):
        if s == 0:
            return float(h(c[None, :])[0])
        extra = ()
        if h.kind == "cone" and len(c) == 1:
            extra = (float((h.apex[0] - c[0]) / s),)
        n = quadrature_n if len(c) == 1 else max(64, int(round(quadrature_n ** (1.0 / len(c)))) * 4)
        pts, w = _tensor_midpoint(shape, len(c), n, extra)
        return float(np.dot(h(c[None, :] + s * pts), w))

    return expect(sigma, x) - expect(sigma_p, y)


def interpolate(mu0: Distribution, mu1: Distribution, t):
    """``(1 - t) mu0 + t mu1``; exact if ``t`` and the weights are Fractions."""
    if not 0 <= t <= 1:
        raise ParameterError("t must lie in [0, 1]")
    _same_space(mu0, mu1)
    if isinstance(t, Fraction) or mu0.exact or mu1.exact:
        t = Fraction(t)
        w = as_exact(mu0.weights) * (1 - t) + as_exact(mu1.weights) * t
    else:
        w = (1.0 - t) * np.asarray(mu0.weights, dtype=np.float64) + t * np.asarray(mu1.weights, dtype=np.float64)
        w = w / w.sum()
    return Distribution(mu0.space, w)
