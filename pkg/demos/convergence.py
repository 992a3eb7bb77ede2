"""
Convergence of the three robust solvers
=======================================

FISTA, generalized ADMM and the nested majorize-minimize scheme all minimize
the same Huber-plus-l1 objective. They differ in how much work one iteration
buys. ADMM factors its linear system once and reuses it; the nested scheme
runs a full inner lasso solve for every outer step. Here we count the
iterations each needs to come within 1e-5 (relative) of a very accurate
solution, at the lambda chosen on the regularization path.
"""

import numpy as np

from robustcs.harness import ExperimentConfig, make_data
from robustcs.harness.experiment import huber_params, run_solver
from robustcs.solvers import (SolverOptions, solve_admm_robust, solve_fista_robust,
                              solve_nested_robust)

cfg = ExperimentConfig(seed=0, solvers=("admm",))
data = make_data(cfg)
pilot = {}
params = huber_params(cfg, data, pilot)
lam = run_solver(cfg, data, "admm", params, 0, pilot).path.lambda_star
prob = data.problem(0)

tight = SolverOptions(abs_tol=1e-10, rel_tol=1e-10, max_iter=100000)
ref = solve_admm_robust(prob, lam, params, tight).x


def iterations_to_target(solve):
    # first iteration whose iterate is within 1e-5 of the reference
    hit = []

    def watch(k, x):
        if not hit and np.linalg.norm(x - ref) <= 1e-5 * np.linalg.norm(ref):
            hit.append(k)

    solve(watch)
    return hit[0] if hit else None


opts = SolverOptions(abs_tol=1e-10, rel_tol=1e-10, max_iter=20000)
counts = {
    "admm": iterations_to_target(lambda cb: solve_admm_robust(prob, lam, params, opts,
                                                              callback=cb)),
    "fista": iterations_to_target(lambda cb: solve_fista_robust(prob, lam, params, opts,
                                                                callback=cb)),
    # the nested count is the running total of inner iterations
    "nested": iterations_to_target(lambda cb: solve_nested_robust(
        prob, lam, params, opts.replace(max_iter=500), cfg.inner_options(), callback=cb)),
}
for name, k in counts.items():
    print(f"{name:>6}: {k if k is not None else 'not reached'} iterations")
