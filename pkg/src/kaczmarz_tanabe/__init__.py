"""Kaczmarz and Kaczmarz-Tanabe row-action solvers with SVD-based convergence checks."""

from .linalg import (
    SvdFactorization,
    min_norm_solution,
    null_projection,
    numeric_rank,
    rowspace_projection,
    spectral_norm,
    svd,
)
from .problems import (
    ProblemSpec,
    model_problem_1,
    model_problem_2,
    model_problem_3,
    parallel_projector,
    perturb_gaussian,
    perturb_uniform,
    shepp_logan_phantom,
)
from .row_action import (
    IterationTrace,
    SweepOperator,
    ZeroRowError,
    build_sweep_operator,
    kaczmarz_iterate,
    kaczmarz_step,
    kaczmarz_sweep,
    residual_map_norm,
    tanabe_iterate,
)
from .spectral import (
    BoundCheckResult,
    SpectralReport,
    check_exact_bounds,
    check_perturbed_bounds,
    spectral_report,
    verify_pinv_identity,
)

__version__ = "0.1.0"

__all__ = [
    "SvdFactorization",
    "min_norm_solution",
    "null_projection",
    "numeric_rank",
    "rowspace_projection",
    "spectral_norm",
    "svd",
    "ProblemSpec",
    "model_problem_1",
    "model_problem_2",
    "model_problem_3",
    "parallel_projector",
    "perturb_gaussian",
    "perturb_uniform",
    "shepp_logan_phantom",
    "IterationTrace",
    "SweepOperator",
    "ZeroRowError",
    "build_sweep_operator",
    "kaczmarz_iterate",
    "kaczmarz_step",
    "kaczmarz_sweep",
    "residual_map_norm",
    "tanabe_iterate",
    "BoundCheckResult",
    "SpectralReport",
    "check_exact_bounds",
    "check_perturbed_bounds",
    "spectral_report",
    "verify_pinv_identity",
]
