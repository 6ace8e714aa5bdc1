"""Noncommutative examples: Bloch-ball distances, jump costs, two-sheet spaces."""
import math
from dataclasses import dataclass

import numpy as np

from .core import (
    CostMatrix,
    Distribution,
    FiniteMetricSpace,
    TwoSheetSpace,
    TwoSheetState,
    build_two_sheet,
)
from .errors import (
    DegenerateError,
    EmbeddingError,
    InvariantError,
    ParameterError,
    ShapeError,
)
from .solver import solve_jump, transport

__all__ = [
    "BlochState",
    "JumpCostParams",
    "equatorial_distance",
    "midpoint_defect",
    "moyal_ball_distance",
    "jump_cost",
    "two_sheet_pure_distance",
    "two_sheet_state_distance",
    "propsm_check",
    "higgs_comparison",
]

BALL_TOL = 1e-12
SHIFT_MODES = ("none", "linear", "quadratic")


@dataclass(frozen=True)
class BlochState:
    """Point of the closed unit ball; ``z`` is the distinguished axis."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if self.x * self.x + self.y * self.y + self.z * self.z > 1 + BALL_TOL:
            raise InvariantError(f"({self.x}, {self.y}, {self.z}) lies outside the unit ball")

    def as_array(self):
        return np.array([self.x, self.y, self.z], dtype=np.float64)


@dataclass(frozen=True)
class JumpCostParams:
    """``norm_DI`` and the shift subtracted from the jump cost.

    ``shift_mode``: ``"none"`` (plain cost), ``"linear"`` (minus
    ``1/norm_DI``, vanishes on the diagonal) or ``"quadratic"`` (minus
    ``1/norm_DI**2``).
    """

    norm_DI: float
    shift_mode: str = "none"

    def __post_init__(self):
        if not self.norm_DI > 0:
            raise ParameterError("norm_DI must be positive")
        if self.shift_mode not in SHIFT_MODES:
            raise ParameterError(f"shift_mode must be one of {SHIFT_MODES}")

    @property
    def shift(self):
        if self.shift_mode == "linear":
            return 1.0 / self.norm_DI
        if self.shift_mode == "quadratic":
            return 1.0 / self.norm_DI**2
        return 0.0


# ---------------------------------------------------------------------------
# two-point fiber / Bloch ball


def equatorial_distance(theta1, theta2, r, dD):
    """``(2 r / dD) |sin((theta1 - theta2) / 2)|``: the chord metric on a circle
    of pure states at height fixed by ``r``."""
    if not dD > 0:
        raise ParameterError("|D1 - D2| must be positive")
    if not 0 <= r <= 1:
        raise ParameterError("r must lie in [0, 1]")
    return 2.0 * r / dD * np.abs(np.sin((np.asarray(theta1) - np.asarray(theta2)) / 2.0))


def midpoint_defect(theta1, theta2, grid_n=10_000, r=1.0, dD=1.0, metric=None, span=None):
    """How far the best candidate midpoint misses both half-distances.

    Candidates are ``grid_n + 1`` equispaced angles over a full turn
    (over ``[theta1, theta2]`` for a custom metric, or over ``span``). For
    each, the larger of ``|d(theta1, m) - d/2|`` and ``|d(m, theta2) - d/2|``
    is taken; the minimum over candidates is returned. ``metric`` replaces the chord metric, e.g. ``lambda a, b:
    abs(a - b)`` for a control on a line.
    """
    if grid_n < 1000:
        raise ParameterError("grid_n must be at least 1000")
    chord = metric is None
    if chord:
        if math.isclose(math.remainder(theta1 - theta2, 2 * math.pi), 0.0, abs_tol=1e-15):
            raise DegenerateError("coincident angles have a trivial midpoint")

        def metric(a, b):
            return equatorial_distance(a, b, r, dD)

    elif theta1 == theta2:
        raise DegenerateError("coincident points have a trivial midpoint")
    if span is None:
        span = (theta1, theta1 + 2 * math.pi) if chord else (min(theta1, theta2), max(theta1, theta2))
    lo, hi = span
    cand = lo + (hi - lo) * np.arange(grid_n + 1) / grid_n
    half = 0.5 * metric(theta1, theta2)
    dev = np.maximum(np.abs(metric(theta1, cand) - half), np.abs(metric(cand, theta2) - half))
    return float(dev.min())


def moyal_ball_distance(a: BlochState, b: BlochState, theta_param):
    """Distance between two states of the truncated Moyal plane.

    ``d_Ec`` is the Euclidean distance and ``alpha`` the angle of the segment
    with the horizontal plane. The value is ``sqrt(theta/2)`` times
    ``cos(alpha) d_Ec`` for ``alpha <= pi/4`` and ``d_Ec / (2 sin(alpha))``
    above; both branches give ``d_Ec / sqrt(2)`` at ``pi/4``.
    """
    if not theta_param > 0:
        raise ParameterError("theta must be positive")
    for s in (a, b):
        if not isinstance(s, BlochState):
            raise InvariantError("expected BlochState instances")
    va, vb = a.as_array(), b.as_array()
    d = float(np.linalg.norm(va - vb))
    if d == 0.0:
        return 0.0
    alpha = math.asin(min(1.0, abs(va[2] - vb[2]) / d))
    pref = math.sqrt(theta_param / 2.0)
    if alpha <= math.pi / 4:
        return pref * math.cos(alpha) * d
    return pref * d / (2.0 * math.sin(alpha))


# ---------------------------------------------------------------------------
# two sheets


def two_sheet_pure_distance(base_d, norm_DI):
    """``sqrt(d^2 + 1/norm_DI^2)``: geodesic from ``(x, 0)`` to ``(y, 1)``."""
    if base_d < 0:
        raise ParameterError("base distance must be nonnegative")
    if not norm_DI > 0:
        raise ParameterError("norm_DI must be positive")
    inv = 1.0 / norm_DI
    return math.sqrt(base_d * base_d + inv * inv)


def jump_cost(base: FiniteMetricSpace, params: JumpCostParams) -> CostMatrix:
    """``cost[i, j] = sqrt(dist[i, j]^2 + 1/norm_DI^2) - shift``.

    Without shift the diagonal is ``1/norm_DI``; the linear shift makes it
    vanish (and the result is a metric, a concave increasing function of
    ``dist``). The quadratic shift can go negative when ``norm_DI < 1``.
    """
    D = np.asarray(base.dist, dtype=np.float64)
    inv = 1.0 / params.norm_DI
    C = np.sqrt(D * D + inv * inv)
    if params.shift_mode == "linear":
        C = C - inv
        C[D == 0] = 0.0
    elif params.shift_mode == "quadratic":
        C = C - params.shift
        if np.any(C < 0):
            raise ParameterError("the quadratic shift makes the cost negative (norm_DI < 1)")
    return CostMatrix(C, vanishing_diagonal=params.shift_mode == "linear")


def _embed(space2: TwoSheetSpace, s):
    n = space2.base.n
    m = space2.fiber_points
    if isinstance(s, TwoSheetState):
        if s.mu.shape != (n,):
            raise ShapeError(f"state has {len(s.mu)} weights per sheet, base has {n} points")
        w = np.zeros(space2.n)
        w[:n] = np.asarray(s.mu, dtype=np.float64)
        w[(m - 1) * n:] = np.asarray(s.nu, dtype=np.float64)
        return w
    if isinstance(s, Distribution):
        w = np.asarray(s.weights, dtype=np.float64)
        if w.shape != (space2.n,):
            raise ShapeError("distribution does not live on the two-sheet grid")
        if np.any(w[n:(m - 1) * n] != 0):
            raise EmbeddingError("state carries mass on interior fiber levels")
        return w
    raise TypeError("expected a TwoSheetState or a Distribution on the grid")


def two_sheet_state_distance(space2: TwoSheetSpace, s1, s2):
    """Transport distance between two states of the two sheets, on the grid.

    Only the rows of the support nodes of ``s1`` are computed.
    """
    w1, w2 = _embed(space2, s1), _embed(space2, s2)
    rows = np.flatnonzero(w1)
    cols = np.flatnonzero(w2)
    C = space2.submatrix(rows, cols)
    a, b = w1[rows], w2[cols]
    b = b * (a.sum() / b.sum())
    return transport(C, a, b)[1]


def propsm_check(base: FiniteMetricSpace, norm_DI, x_idx, y_idx):
    """Jump transport between point masses vs. the product-geodesic formula."""
    x, y = base.index(x_idx), base.index(y_idx)
    cost = jump_cost(base, JumpCostParams(norm_DI, "none"))
    wI = float(solve_jump(cost, Distribution.point_mass(base, x), Distribution.point_mass(base, y)).plan.value)
    dprime = two_sheet_pure_distance(float(base.dist[x, y]), norm_DI)
    return {"wI": wI, "dprime": dprime, "residual": abs(wI - dprime)}


def higgs_comparison(base: FiniteMetricSpace, higgs_profile, fiber_points, x_idx, y_idx, reach=None):
    """Cross-sheet geodesic on the fluctuated grid next to ``sqrt(d^2 + 1/p(x)^2)``.

    No relation between the two is asserted; they agree for a constant
    profile.
    """
    p = np.asarray(higgs_profile, dtype=np.float64)
    if p.shape != (base.n,):
        raise ShapeError("one profile value per base point expected")
    if np.any(p <= 0):
        raise ParameterError("profile values must be positive")
    x, y = base.index(x_idx), base.index(y_idx)
    space2 = build_two_sheet(base, float(p.mean()), fiber_points, higgs=p, reach=reach)
    geo = space2.distance(space2.node(x, 0), space2.node(y, fiber_points - 1))
    d = float(base.dist[x, y])
    return {"geodesic": geo, "tilde_cost": math.sqrt(d * d + (1.0 / p[x]) ** 2)}

