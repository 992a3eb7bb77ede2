"""Robust compressed-sensing recovery with Huber and l1 data-fit terms."""

from .core_model import (HuberParams, IterativelyReweighted, ModifiedResiduals,
                         SensingProblem, estimate_scale_mad, huber_psi, huber_rho,
                         irls_weights, majorization_point, robust_grad, robust_loss)
from .linalg_kernels import QSpec, build_cached_solver, cached_solve, spectral_bound
from .prox_ops import elastic_shrink, group_shrink, group_shrink_rows, soft_threshold
from .solvers import (MultiTaskProblem, Solution, SolverOptions, Status,
                      solve_admm_affine, solve_admm_l1loss, solve_admm_robust,
                      solve_fista_robust, solve_multitask, solve_nested_robust)

__all__ = [
    "HuberParams", "IterativelyReweighted", "ModifiedResiduals", "SensingProblem",
    "estimate_scale_mad", "huber_psi", "huber_rho", "irls_weights", "majorization_point",
    "robust_grad", "robust_loss",
    "QSpec", "build_cached_solver", "cached_solve", "spectral_bound",
    "elastic_shrink", "group_shrink", "group_shrink_rows", "soft_threshold",
    "MultiTaskProblem", "Solution", "SolverOptions", "Status",
    "solve_admm_affine", "solve_admm_l1loss", "solve_admm_robust", "solve_fista_robust",
    "solve_multitask", "solve_nested_robust",
]

__version__ = "0.1.0"
