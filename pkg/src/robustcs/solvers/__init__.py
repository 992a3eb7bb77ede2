"""Recovery algorithms for robust compressed sensing."""

from ._common import (IterationRecord, Solution, SolverOptions, SolverTrace, Status,
                      admm_threshold, check_stopping)
from .extensions import (MultiTaskProblem, affine_cache, l1loss_cache, l1loss_objective,
                         multitask_cache, multitask_objective, solve_admm_affine,
                         solve_admm_l1loss, solve_multitask, sum_constraint)
from .robust import (NESTED_INNER_DEFAULTS, admm_cache, fista_cache, nested_cache,
                     robust_objective, solve_admm_robust, solve_fista_robust,
                     solve_nested_robust)
from .certificates import multitask_optimality_residual, optimality_residual

__all__ = [
    "IterationRecord", "Solution", "SolverOptions", "SolverTrace", "Status",
    "admm_threshold", "check_stopping",
    "MultiTaskProblem", "sum_constraint",
    "solve_fista_robust", "solve_admm_robust", "solve_nested_robust",
    "solve_admm_affine", "solve_admm_l1loss", "solve_multitask",
    "fista_cache", "admm_cache", "nested_cache", "affine_cache", "l1loss_cache",
    "multitask_cache", "robust_objective", "l1loss_objective", "multitask_objective",
    "NESTED_INNER_DEFAULTS", "optimality_residual", "multitask_optimality_residual",
]
