"""Single-task robust CS solvers: FISTA, generalized ADMM and the nested MM baseline.

All three minimize

    f(x) = sum_i rho(y_i - (Phi x)_i) + lam * ||x||_1 + beta * ||x||_2^2

(``beta = 0`` unless the elastic-net option is set).
"""

import numpy as np

from ..core_model import HuberParams, SensingProblem, huber_psi, huber_rho
from ..linalg_kernels import (CachedSolver, QSpec, SpectralBound, build_cached_solver,
                              cached_solve, spectral_bound)
from ..prox_ops import elastic_shrink, soft_threshold
from ._common import Monitor, SolverOptions, Status, admm_threshold, check_lambda, check_stopping
from .certificates import optimality_residual

__all__ = [
    "robust_objective",
    "fista_cache",
    "admm_cache",
    "nested_cache",
    "solve_fista_robust",
    "solve_admm_robust",
    "solve_nested_robust",
    "NESTED_INNER_DEFAULTS",
]

# inner CS tolerances used by the nested baseline
NESTED_INNER_DEFAULTS = SolverOptions(abs_tol=1e-4, rel_tol=1e-2, max_iter=1000)
_INNER_FLOOR = 1e-12


def robust_objective(x, prob: SensingProblem, lam: float, params: HuberParams,
                     beta: float = 0.0) -> float:
    r = prob.y - prob.phi @ x
    val = float(np.sum(huber_rho(r, params))) + lam * float(np.sum(np.abs(x)))
    if beta:
        val += beta * float(x @ x)
    return val


def fista_cache(phi) -> SpectralBound:
    return spectral_bound(phi)


def lipschitz(bound: SpectralBound) -> float:
    # twice the largest eigenvalue of Phi^T Phi, a safe over-estimate
    return 2.0 * bound.lambda_max if not bound.is_zero else 1.0


def admm_cache(phi, opts: SolverOptions) -> CachedSolver:
    return build_cached_solver(phi, opts.mu, QSpec(opts.eta + 2.0 * opts.beta))


def nested_cache(phi, opts: SolverOptions, inner_opts: SolverOptions = None) -> CachedSolver:
    inner_opts = inner_opts or NESTED_INNER_DEFAULTS
    # inner problem is scaled by 1/mu, so its ridge weight is beta/mu
    return build_cached_solver(phi, 1.0, QSpec(inner_opts.eta + 2.0 * opts.beta / opts.mu))


def solve_fista_robust(prob: SensingProblem, lam: float, params: HuberParams,
                       opts: SolverOptions = None, cache: SpectralBound = None,
                       callback=None):
    """Robust CS by FISTA with step ``1/L``, ``L = 2 * lambda_max(Phi^T Phi)``.

    Parameters
    ----------
    prob : SensingProblem
    lam : float
        l1 weight, must be positive.
    params : HuberParams
    opts : SolverOptions, optional
        ``beta > 0`` switches the shrink step to the elastic-net form.
    cache : SpectralBound, optional
        Precomputed spectral bound of ``prob.phi`` (reused along a path).
    callback : callable, optional
        Called as ``callback(k, x)`` after every iteration.

    Returns
    -------
    Solution
        Terminates when ``||x^k - x^{k-1}|| <= abs_tol * max(1, ||x^k||)`` and
        the optimality residual is at most ``10 * abs_tol``.
    """
    lam = check_lambda(lam)
    opts = opts or SolverOptions()
    bound = cache if cache is not None else spectral_bound(prob.phi)
    L = lipschitz(bound)
    phi, y, beta = prob.phi, prob.y, opts.beta

    x_prev = opts.start(prob.n)
    z = x_prev.copy()
    t = opts.t0
    mon = Monitor(opts)
    converged = False
    x = x_prev
    for k in range(1, opts.max_iter + 1):
        v = z - (phi.T @ huber_psi(phi @ z - y, params)) / L
        if beta > 0:
            x = elastic_shrink(v, lam, 2.0 * beta, L)
        else:
            x = soft_threshold(v, lam / L)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        z = x + ((t - 1.0) / t_next) * (x - x_prev)
        change = np.linalg.norm(x - x_prev)
        eps = opts.abs_tol * max(1.0, np.linalg.norm(x))
        converged = mon.record(robust_objective(x, prob, lam, params, beta),
                               (change,), (), (eps,), (),
                               lambda: optimality_residual(x, prob, lam, params, beta))
        if callback is not None:
            callback(k, x)
        x_prev, t = x, t_next
        if converged:
            break
    return mon.finish(x, converged, lam, lipschitz=L, factorizations=0)


def _admm_loop(phi, y, lam, params, opts, solver, x0, u0, objective, callback,
               shrink=soft_threshold, certify=None):
    """Generalized ADMM with modified-residual majorization (``W = mu I``).

    Shared by the single-task, nested-inner and multi-task drivers; ``x0`` and
    ``u0`` may be vectors or matrices. ``certify(z)``, when given, gates
    convergence on the optimality residual of z.
    """
    mu, eta = opts.mu, opts.eta
    n = x0.size
    x, z, u = x0.copy(), x0.copy(), u0.copy()
    phix = phi @ x
    mon = Monitor(opts)
    converged = False
    for k in range(1, opts.max_iter + 1):
        # mu * Phi^T v with v = psi(y - Phi x)/mu + Phi x
        rhs = phi.T @ (huber_psi(y - phix, params) + mu * phix) + eta * (z - u)
        x = cached_solve(solver, rhs)
        z_old = z
        z = shrink(x + u, lam / eta)
        u = u + x - z
        phix = phi @ x
        r = np.linalg.norm(x - z)
        s = eta * np.linalg.norm(z - z_old)
        eps_p = admm_threshold(n, opts, max(np.linalg.norm(x), np.linalg.norm(z)))
        eps_d = admm_threshold(n, opts, eta * np.linalg.norm(u))
        converged = mon.record(objective(z), (r,), (s,), (eps_p,), (eps_d,),
                               None if certify is None else (lambda: certify(z)))
        if callback is not None:
            callback(k, z)
        if converged:
            break
    return x, z, u, mon, converged


def warm_dual(prob: SensingProblem, x0, params: HuberParams, opts: SolverOptions):
    """Scaled dual at which ``x0`` is a fixed point of the x-step."""
    grad = prob.phi.T @ huber_psi(prob.phi @ x0 - prob.y, params)
    return -(grad + 2.0 * opts.beta * x0) / opts.eta


def solve_admm_robust(prob: SensingProblem, lam: float, params: HuberParams,
                      opts: SolverOptions = None, cache: CachedSolver = None,
                      callback=None):
    """Robust CS by generalized ADMM; the x-step minimizes the MR majorizer once.

    The x-system ``mu Phi^T Phi + (eta + 2 beta) I`` is factored once (or taken
    from ``cache``). The reported solution is the exactly sparse z-iterate.
    Convergence needs the primal and dual residual tests and an optimality
    residual of z at most ``10 * abs_tol``.
    """
    lam = check_lambda(lam)
    opts = opts or SolverOptions()
    built = cache is None
    solver = admm_cache(prob.phi, opts) if built else cache
    x0 = opts.start(prob.n)
    u0 = warm_dual(prob, x0, params, opts) if opts.x0 is not None else np.zeros(prob.n)
    x, z, u, mon, converged = _admm_loop(
        prob.phi, prob.y, lam, params, opts, solver, x0, u0,
        lambda zz: robust_objective(zz, prob, lam, params, opts.beta), callback,
        certify=lambda zz: optimality_residual(zz, prob, lam, params, opts.beta))
    return mon.finish(z, converged, lam, x=x, u=u, factorizations=int(built))


def solve_nested_robust(prob: SensingProblem, lam: float, params: HuberParams,
                        opts: SolverOptions = None, inner_opts: SolverOptions = None,
                        cache: CachedSolver = None, callback=None):
    """Double-loop MM baseline: each outer step solves a full standard CS problem.

    The outer step majorizes the robust loss with ``W = mu I`` at the current
    iterate and hands ``(mu/2)||v - Phi x||^2 + lam ||x||_1`` to an inner ADMM
    lasso solver, started from the current iterate with a zero dual. If the
    inner result does not lower the surrogate it is re-solved with tighter
    tolerances; failing that the outer iterate is kept, so the robust objective
    never increases. Convergence needs a small outer step and an optimality
    residual of at most ``10 * abs_tol``; each time the step test passes but
    the residual test fails, the inner tolerances shrink tenfold (down to
    1e-12), so the inner inexactness decays as the outer loop settles.

    ``callback(k, x)`` fires on every inner iteration with a running count.
    ``info["inner_iterations"]`` holds the total inner work.
    """
    lam = check_lambda(lam)
    opts = opts or SolverOptions()
    inner_opts = inner_opts or NESTED_INNER_DEFAULTS
    mu, beta = opts.mu, opts.beta
    built = cache is None
    solver = nested_cache(prob.phi, opts, inner_opts) if built else cache
    inner_opts = inner_opts.replace(mu=1.0, beta=beta / mu, x0=None)
    quad = HuberParams.quadratic()
    phi = prob.phi

    def surrogate(xx, v):
        d = v - phi @ xx
        return 0.5 * mu * float(d @ d) + lam * float(np.sum(np.abs(xx))) + beta * float(xx @ xx)

    x = opts.start(prob.n)
    mon = Monitor(opts)
    converged = False
    total_inner = 0

    def inner_cb(k, zz):
        if callback is not None:
            callback(total_inner + k, zz)

    base = inner_opts
    for _ in range(opts.max_iter):
        phix = phi @ x
        v = huber_psi(prob.y - phix, params) / mu + phix
        current = surrogate(x, v)
        io = base
        cand = x
        for _attempt in range(4):
            _, z, _, imon, _ = _admm_loop(
                phi, v, lam / mu, quad, io, solver, x, np.zeros(prob.n),
                lambda zz: 0.0, inner_cb)
            total_inner += len(imon.trace)
            if surrogate(z, v) <= current:
                cand = z
                break
            io = io.replace(abs_tol=io.abs_tol * 0.1, rel_tol=io.rel_tol * 0.1)
        change = np.linalg.norm(cand - x)
        x = cand
        eps = opts.abs_tol * max(1.0, np.linalg.norm(x))
        converged = mon.record(robust_objective(x, prob, lam, params, beta),
                               (change,), (), (eps,), (),
                               lambda: optimality_residual(x, prob, lam, params, beta))
        if converged:
            break
        if check_stopping(mon.trace) is Status.CONVERGED:
            if base.abs_tol <= _INNER_FLOOR and change == 0:
                break  # inner solves are as tight as they go and no longer move x
            base = base.replace(abs_tol=max(base.abs_tol * 0.1, _INNER_FLOOR),
                                rel_tol=max(base.rel_tol * 0.1, _INNER_FLOOR))
    return mon.finish(x, converged, lam, inner_iterations=total_inner,
                      factorizations=int(built))
