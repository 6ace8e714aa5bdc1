"""Wasserstein-1 distances on finite metric spaces, by primal and dual
linear programming, cross-checked against closed-form distances."""
from ._jit import JIT_ENABLED
from .closedform import (
    SHAPES,
    CumulativeDifference,
    Potential,
    Shape,
    WavePacket,
    barycenter_lower_bound,
    cumulative_difference,
    discretize_packet,
    distance_to_pure,
    get_shape,
    interpolate,
    optimal_potential,
    potential_gap,
    product_upper_bound,
    wasserstein_1d,
    wavepacket_distance,
)
from .core import (
    CostMatrix,
    Distribution,
    FiniteMetricSpace,
    Point,
    TwoSheetSpace,
    TwoSheetState,
    Violation,
    barycenter,
    build_grid_circle,
    build_grid_line,
    build_two_sheet,
    discretize_density,
    first_moment,
    validate_metric,
)
from .errors import *  # noqa: F401,F403
from .ncgeom import (
    BlochState,
    JumpCostParams,
    equatorial_distance,
    higgs_comparison,
    jump_cost,
    midpoint_defect,
    moyal_ball_distance,
    propsm_check,
    two_sheet_pure_distance,
    two_sheet_state_distance,
)
from .solver import (
    DualPotential,
    SolveResult,
    TransportPlan,
    duality_gap,
    oracle_enumerate,
    solve,
    solve_dual,
    solve_jump,
    solve_primal,
)

__version__ = "0.1.0"
