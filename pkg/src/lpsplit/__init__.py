"""Splitting solvers for monotone inclusions 0 in (A+B)x in lp geometry."""

from .geometry import (
    DualVector,
    PrimalVector,
    SpaceDescriptor,
    duality_map,
    inverse_duality_map,
    lyapunov,
    pairing,
    step_size_cap,
    v_functional,
)
from .operators import (
    AffineMap,
    IntervalIndicator,
    LeastSquaresGradientMap,
    QuadraticPiece,
    ScaledAbs,
    SeparableConvex,
    ZeroFn,
    ZeroMap,
    affine_map,
    box_indicator,
    l1_term,
    least_squares_gradient,
    monotonicity_probe,
    quadratic_term,
    spectral_norm_power,
    zero_function,
    zero_map,
)
from .problems import (
    CompositeMinProblem,
    OracleSolution,
    ProblemInstance,
    brute_force_inclusion_check,
    composite_to_inclusion,
    coordinate_descent_oracle,
    gen_lasso_like,
    gen_skew_vi,
    gen_strongly_monotone,
)
from .resolvent import (
    ResolventRequest,
    ResolventResult,
    generalized_projection,
    inclusion_residual,
    resolve,
    resolve_dual,
)
from .solvers import (
    DescentViolationError,
    DescentWarning,
    FixedStep,
    Halpern,
    IterationRecord,
    LineSearch,
    LineSearchBudgetError,
    RateCertificate,
    SolveReport,
    SolveStatus,
    SolverConfig,
    line_search_step,
    rate_certificate,
    solve,
    solve_fixed,
    solve_halpern,
    solve_linesearch,
    tseng_step,
)

__version__ = "0.1.0"
