"""ADMM-based extensions: affine constraint, l1 data fit, multi-task group sparsity."""

from dataclasses import dataclass

import numpy as np

from ..core_model import HuberParams, SensingProblem, huber_psi, huber_rho
from ..linalg_kernels import (CachedSolver, QSpec, build_cached_solver,
                              cached_solve, spectral_bound)
from ..prox_ops import group_shrink_rows, soft_threshold
from ._common import Monitor, SolverOptions, admm_threshold, check_lambda
from .certificates import multitask_optimality_residual
from .robust import _admm_loop, lipschitz, robust_objective

__all__ = [
    "MultiTaskProblem",
    "sum_constraint",
    "affine_cache",
    "l1loss_cache",
    "multitask_cache",
    "solve_admm_affine",
    "solve_admm_l1loss",
    "solve_multitask",
    "l1loss_objective",
    "multitask_objective",
]


@dataclass(frozen=True)
class MultiTaskProblem:
    """Shared ``phi`` (M x N) with one measurement column per task in ``Y`` (M x T)."""

    phi: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        phi = np.atleast_2d(np.asarray(self.phi, dtype=float))
        Y = np.asarray(self.Y, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, np.newaxis]
        if Y.ndim != 2 or Y.shape[0] != phi.shape[0] or Y.shape[1] < 1:
            raise ValueError(f"Y must be {phi.shape[0]} x T with T >= 1, got {Y.shape}")
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(Y))):
            raise ValueError("phi and Y must be finite")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return self.phi.shape[1]

    @property
    def tasks(self) -> int:
        return self.Y.shape[1]

    def task(self, i) -> SensingProblem:
        return SensingProblem(self.phi, self.Y[:, i])


def sum_constraint(total: float, n: int) -> np.ndarray:
    """``c = 1 / total`` in every entry, so ``c^T x = 1`` encodes ``sum(x) = total``."""
    if total == 0:
        raise ValueError("total must be nonzero")
    return np.full(n, 1.0 / total)


def affine_cache(phi, c, opts: SolverOptions) -> CachedSolver:
    return build_cached_solver(phi, opts.mu, QSpec(opts.eta, (opts.second_penalty, c)))


def l1loss_cache(phi, opts: SolverOptions) -> CachedSolver:
    return build_cached_solver(phi, opts.eta, QSpec(opts.second_penalty))


def multitask_cache(phi, opts: SolverOptions, engine: str = "admm"):
    if engine == "fista":
        return spectral_bound(phi)
    return build_cached_solver(phi, opts.mu, QSpec(opts.eta))


def solve_admm_affine(prob: SensingProblem, lam: float, c, params: HuberParams,
                      opts: SolverOptions = None, cache: CachedSolver = None,
                      callback=None):
    """Robust CS subject to ``c^T x = 1``.

    The x-step uses ``H = (mu Phi^T Phi + eta1 I + eta2 c c^T)^-1`` through the
    rank-one cached solver; ``u2`` is the scaled scalar dual of the constraint.
    Termination requires the usual residual tests plus ``|c^T x - 1|`` and
    ``|c^T z - 1|`` both at most ``abs_tol``; the reported z is therefore
    feasible to ``abs_tol``.
    """
    lam = check_lambda(lam)
    opts = opts or SolverOptions()
    if opts.beta:
        raise ValueError("the affine solver does not take an elastic-net term")
    c = np.asarray(c, dtype=float).reshape(-1)
    if c.shape != (prob.n,):
        raise ValueError(f"c must have length {prob.n}")
    if not np.any(c):
        raise ValueError("c must be nonzero")
    eta1, eta2, mu = opts.eta, opts.second_penalty, opts.mu
    built = cache is None
    solver = affine_cache(prob.phi, c, opts) if built else cache
    phi, y, n = prob.phi, prob.y, prob.n

    x = opts.start(n)
    z = x.copy()
    u1 = np.zeros(n)
    u2 = 0.0
    phix = phi @ x
    mon = Monitor(opts)
    converged = False
    for k in range(1, opts.max_iter + 1):
        rhs = (phi.T @ (huber_psi(y - phix, params) + mu * phix)
               + eta1 * (z - u1) + eta2 * (1.0 - u2) * c)
        x = cached_solve(solver, rhs)
        z_old = z
        z = soft_threshold(x + u1, lam / eta1)
        u1 = u1 + x - z
        r2 = float(c @ x) - 1.0
        u2 = u2 + r2
        phix = phi @ x
        r1 = np.linalg.norm(x - z)
        rz = abs(float(c @ z) - 1.0)
        s = eta1 * np.linalg.norm(z - z_old)
        eps_p = admm_threshold(n, opts, max(np.linalg.norm(x), np.linalg.norm(z)))
        eps_d = admm_threshold(n, opts, eta1 * np.linalg.norm(u1))
        converged = mon.record(robust_objective(z, prob, lam, params),
                               (r1, abs(r2), rz), (s,),
                               (eps_p, opts.abs_tol, opts.abs_tol), (eps_d,))
        if callback is not None:
            callback(k, z)
        if converged:
            break
    return mon.finish(z, converged, lam, x=x, u1=u1, u2=u2, factorizations=int(built))


def l1loss_objective(x, prob: SensingProblem, lam: float) -> float:
    return float(np.sum(np.abs(prob.y - prob.phi @ x)) + lam * np.sum(np.abs(x)))


def solve_admm_l1loss(prob: SensingProblem, lam: float, opts: SolverOptions = None,
                      cache: CachedSolver = None, callback=None):
    """Minimize ``||y - Phi x||_1 + lam ||x||_1`` by splitting twice.

    Splits ``v = Phi x - y`` and ``z = x`` with penalties ``eta1 = opts.eta``
    and ``eta2 = opts.second_penalty``; the x-step is exact through the cached
    factor of ``eta1 Phi^T Phi + eta2 I``. Stops when the residuals
    ``s1 = eta1 (v+ - v)``, ``s2 = eta2 (z+ - z)``, ``r1 = x - z`` and
    ``r2 = Phi x - y - v`` are all within tolerance.
    """
    lam = check_lambda(lam)
    opts = opts or SolverOptions()
    eta1, eta2 = opts.eta, opts.second_penalty
    built = cache is None
    solver = l1loss_cache(prob.phi, opts) if built else cache
    phi, y = prob.phi, prob.y
    m, n = phi.shape

    x = opts.start(n)
    z = x.copy()
    phix = phi @ x
    v = phix - y if opts.x0 is not None else np.zeros(m)
    u1 = np.zeros(m)
    u2 = np.zeros(n)
    mon = Monitor(opts)
    converged = False
    for k in range(1, opts.max_iter + 1):
        x = cached_solve(solver, eta1 * (phi.T @ (v + y - u1)) + eta2 * (z - u2))
        phix = phi @ x
        v_old, z_old = v, z
        v = soft_threshold(phix - y + u1, 1.0 / eta1)
        z = soft_threshold(x + u2, lam / eta2)
        r2 = phix - v - y
        u1 = u1 + r2
        u2 = u2 + x - z
        r1 = x - z
        s1 = eta1 * np.linalg.norm(v - v_old)
        s2 = eta2 * np.linalg.norm(z - z_old)
        eps_r1 = admm_threshold(n, opts, max(np.linalg.norm(x), np.linalg.norm(z)))
        eps_r2 = admm_threshold(m, opts, max(np.linalg.norm(phix), np.linalg.norm(v),
                                             np.linalg.norm(y)))
        eps_s1 = admm_threshold(m, opts, eta1 * np.linalg.norm(u1))
        eps_s2 = admm_threshold(n, opts, eta2 * np.linalg.norm(u2))
        converged = mon.record(l1loss_objective(z, prob, lam),
                               (np.linalg.norm(r1), np.linalg.norm(r2)), (s1, s2),
                               (eps_r1, eps_r2), (eps_s1, eps_s2))
        if callback is not None:
            callback(k, z)
        if converged:
            break
    return mon.finish(z, converged, lam, x=x, v=v, factorizations=int(built))


def multitask_objective(X, prob: MultiTaskProblem, lam: float, params: HuberParams) -> float:
    R = prob.Y - prob.phi @ X
    return float(np.sum(huber_rho(R, params)) + lam * np.sum(np.linalg.norm(X, axis=1)))


def solve_multitask(prob: MultiTaskProblem, lam: float, params: HuberParams,
                    engine: str = "admm", opts: SolverOptions = None, cache=None,
                    callback=None):
    """Multi-task robust CS with a row-wise l2/l1 penalty on ``X`` (N x T).

    ``engine`` is ``"fista"`` or ``"admm"``. Both reduce to the single-task
    solvers when T = 1, including the optimality-residual gate on convergence.
    """
    lam = check_lambda(lam)
    opts = opts or SolverOptions()
    if engine not in ("fista", "admm"):
        raise ValueError(f"unknown engine {engine!r}")
    phi, Y = prob.phi, prob.Y
    shape = (prob.n, prob.tasks)
    obj = lambda X: multitask_objective(X, prob, lam, params)  # noqa: E731
    cert = lambda X: multitask_optimality_residual(X, phi, Y, lam, params)  # noqa: E731

    if engine == "fista":
        bound = cache if cache is not None else spectral_bound(phi)
        L = lipschitz(bound)
        X_prev = opts.start(shape)
        Z = X_prev.copy()
        X = X_prev
        t = opts.t0
        mon = Monitor(opts)
        converged = False
        for k in range(1, opts.max_iter + 1):
            V = Z - (phi.T @ huber_psi(phi @ Z - Y, params)) / L
            X = group_shrink_rows(V, lam / L)
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            Z = X + ((t - 1.0) / t_next) * (X - X_prev)
            change = np.linalg.norm(X - X_prev)
            eps = opts.abs_tol * max(1.0, np.linalg.norm(X))
            converged = mon.record(obj(X), (change,), (), (eps,), (), lambda: cert(X))
            if callback is not None:
                callback(k, X)
            X_prev, t = X, t_next
            if converged:
                break
        return mon.finish(X, converged, lam, lipschitz=L, factorizations=0)

    built = cache is None
    solver = multitask_cache(phi, opts) if built else cache
    X0 = opts.start(shape)
    if opts.x0 is not None:
        U0 = -(phi.T @ huber_psi(phi @ X0 - Y, params)) / opts.eta
    else:
        U0 = np.zeros(shape)
    X, Z, U, mon, converged = _admm_loop(phi, Y, lam, params, opts, solver, X0, U0,
                                         obj, callback, shrink=group_shrink_rows, certify=cert)
    return mon.finish(Z, converged, lam, x=X, u=U, factorizations=int(built))
