"""Finite elements for the 1D fractional Poisson and heat problems and their s -> 1 limit."""
from .fe_core import (
    DiscreteFunction,
    UniformMesh,
    assemble_classical_stiffness,
    assemble_fractional_stiffness,
    assemble_load,
    assemble_mass,
    stiffness_kernel,
)
from .kernel_analytic import (
    FracParams,
    PvQuadratureConfig,
    QuadratureError,
    exact_ball_solution,
    log_gamma,
    normalization_constant,
    pointwise_flap,
    stability_constant,
)
from .rhs_norms import (
    Constant,
    ConvergenceReport,
    MollifiedDiv,
    PiecewiseConstant,
    SinPiX2,
    build_fs,
    dual_norm,
    fit_rate,
    gagliardo_seminorm,
    hs_error,
    hs_norm,
    l2_norm,
    mollifier_rho,
    mollify,
)
from .solvers import (
    ConvergenceError,
    EllipticProblem,
    NotSPDError,
    ParabolicProblem,
    solve_elliptic,
    solve_parabolic,
    solve_spd,
)

__version__ = "0.1.0"
