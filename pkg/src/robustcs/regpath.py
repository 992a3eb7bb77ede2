"""Choosing lambda along the regularization path.

The selected lambda is the largest one whose solution meets a residual budget
``criterion(y - Phi x) <= epsilon``. A geometric grid descending from
``lambda_max`` (where the solution is zero) brackets the crossing, and
bisection on the log scale narrows the bracket. Solves are warm-started down
the path and share one cached factorization.
"""

import csv
from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Optional

import numpy as np
from scipy.stats import norm

from .core_model import HuberParams, SensingProblem, huber_psi, huber_rho
from .linalg_kernels import CachedSolver
from .solvers import (MultiTaskProblem, Solution, SolverOptions, admm_cache, affine_cache,
                      fista_cache, l1loss_cache, multitask_cache, nested_cache,
                      solve_admm_affine, solve_admm_l1loss, solve_admm_robust,
                      solve_fista_robust, solve_multitask, solve_nested_robust)
from .solvers._common import Monitor

__all__ = [
    "CRITERIA",
    "PathConfig",
    "PathRecord",
    "PathResult",
    "lambda_max",
    "criterion_value",
    "estimate_epsilon",
    "select_lambda",
    "solver_names",
    "write_path_csv",
]

CRITERIA = ("huber", "l1", "l2")


@dataclass(frozen=True)
class PathConfig:
    epsilon: float
    criterion: Optional[str] = None  # None: the natural criterion of the solver
    grid_points: int = 20
    decades: float = 4.0
    bisect_rel_width: float = 1e-2

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.grid_points < 2:
            raise ValueError("grid_points must be >= 2")
        if not self.decades > 0 or not self.bisect_rel_width > 0:
            raise ValueError("decades and bisect_rel_width must be positive")
        if self.criterion is not None and self.criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}")


class PathRecord(NamedTuple):
    lam: float
    criterion: float
    l1_norm: float
    nnz: int
    iterations: int
    seconds: float


@dataclass
class PathResult:
    lambda_star: float
    solution: Solution
    records: List[PathRecord]
    met: bool = True
    n_factorizations: int = 0
    grid: np.ndarray = field(default_factory=lambda: np.zeros(0))


def lambda_max(prob, params: HuberParams, loss: str = "huber") -> float:
    """Smallest lambda at which the zero solution is optimal.

    ``"huber"`` uses ``||Phi^T psi(y)||_inf``, ``"l2"`` the quadratic-loss value
    ``||Phi^T y||_inf`` and ``"l1"`` the subgradient bound
    ``||Phi^T sign(y)||_inf``. For a :class:`MultiTaskProblem` the largest row
    l2 norm replaces the max-abs.
    """
    y = prob.Y if isinstance(prob, MultiTaskProblem) else prob.y
    if loss == "huber":
        w = huber_psi(y, params)
    elif loss in ("l2", "quadratic"):
        w = y
    elif loss == "l1":
        w = np.sign(y)
    else:
        raise ValueError(f"unknown loss {loss!r}")
    g = prob.phi.T @ w
    if g.ndim == 2:
        return float(np.max(np.linalg.norm(g, axis=1)))
    return float(np.max(np.abs(g)))


def criterion_value(r, params: HuberParams, kind: str) -> float:
    r = np.asarray(r, dtype=float)
    if kind == "huber":
        return float(np.sum(huber_rho(r, params)))
    if kind == "l2":
        return float(np.sum(r * r))
    if kind == "l1":
        return float(np.sum(np.abs(r)))
    raise ValueError(f"unknown criterion {kind!r}")


def _expected_huber(c, sigma):
    # E[rho(n)] for n ~ N(0, sigma^2)
    if sigma == 0:
        return 0.0
    if np.isinf(c):
        return 0.5 * sigma * sigma
    a = c / sigma
    inner = sigma * sigma * (2.0 * norm.cdf(a) - 1.0 - 2.0 * a * norm.pdf(a))
    return 0.5 * inner + 2.0 * c * sigma * norm.pdf(a) - c * c * norm.sf(a)


def estimate_epsilon(params: HuberParams, m: int, nominal_sigma: float,
                     kind: str = "huber", contamination: float = 0.0,
                     kappa: float = 1.0) -> float:
    """Expected criterion value of an M-vector of Gaussian noise.

    With ``contamination > 0`` the noise is the two-component mixture whose
    outlier entries have variance ``kappa * sigma^2``.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    comps = [(1.0 - contamination, nominal_sigma),
             (contamination, nominal_sigma * np.sqrt(kappa))]
    total = 0.0
    for w, s in comps:
        if w == 0:
            continue
        if kind == "huber":
            e = _expected_huber(params.c, s)
        elif kind == "l2":
            e = s * s
        elif kind == "l1":
            e = s * np.sqrt(2.0 / np.pi)
        else:
            raise ValueError(f"unknown criterion {kind!r}")
        total += w * e
    return float(m * total)


class _Engine(NamedTuple):
    solve: Callable
    cache: Callable
    loss: str


def _engines():
    quad = HuberParams.quadratic()

    def cs(prob, lam, params, opts, cache, **kw):
        return solve_admm_robust(prob, lam, quad, opts, cache=cache)

    def l1(prob, lam, params, opts, cache, **kw):
        return solve_admm_l1loss(prob, lam, opts, cache=cache)

    def affine(prob, lam, params, opts, cache, c=None, **kw):
        return solve_admm_affine(prob, lam, c, params, opts, cache=cache)

    def simple(fn):
        return lambda prob, lam, params, opts, cache, **kw: fn(prob, lam, params, opts,
                                                                cache=cache)

    def nested(prob, lam, params, opts, cache, inner_opts=None, **kw):
        return solve_nested_robust(prob, lam, params, opts, inner_opts, cache=cache)

    def mt(engine):
        return lambda prob, lam, params, opts, cache, **kw: solve_multitask(
            prob, lam, params, engine, opts, cache=cache)

    return {
        "cs": _Engine(cs, lambda phi, opts, **kw: admm_cache(phi, opts), "l2"),
        "admm": _Engine(simple(solve_admm_robust),
                        lambda phi, opts, **kw: admm_cache(phi, opts), "huber"),
        "fista": _Engine(simple(solve_fista_robust),
                         lambda phi, opts, **kw: fista_cache(phi), "huber"),
        "nested": _Engine(nested, lambda phi, opts, inner_opts=None, **kw:
                          nested_cache(phi, opts, inner_opts), "huber"),
        "affine": _Engine(affine, lambda phi, opts, c=None, **kw:
                          affine_cache(phi, c, opts), "huber"),
        "l1": _Engine(l1, lambda phi, opts, **kw: l1loss_cache(phi, opts), "l1"),
        "mt-admm": _Engine(mt("admm"), lambda phi, opts, **kw:
                           multitask_cache(phi, opts, "admm"), "huber"),
        "mt-fista": _Engine(mt("fista"), lambda phi, opts, **kw:
                            multitask_cache(phi, opts, "fista"), "huber"),
    }


_ENGINES = _engines()


def solver_names():
    return tuple(_ENGINES)


def _residual(prob, x):
    if isinstance(prob, MultiTaskProblem):
        return prob.Y - prob.phi @ x
    return prob.y - prob.phi @ x


def select_lambda(prob, params: HuberParams, solver: str, cfg: PathConfig,
                  opts: SolverOptions = None, **solver_kwargs) -> PathResult:
    """Largest lambda on the path whose solution meets ``criterion <= epsilon``.

    Parameters
    ----------
    prob : SensingProblem or MultiTaskProblem
    params : HuberParams
        Loss parameters; also used by the Huber criterion.
    solver : str
        One of :func:`solver_names`. ``"cs"`` is the quadratic-loss baseline.
    cfg : PathConfig
    opts : SolverOptions, optional
        Shared by every solve; ``x0`` is overwritten by the warm start.
    **solver_kwargs
        Extra solver arguments (``c`` for ``"affine"``, ``inner_opts`` for
        ``"nested"``).

    Returns
    -------
    PathResult
        ``met`` is False when no grid point meets the budget; the smallest-lambda
        solution is returned in that case.
    """
    if solver not in _ENGINES:
        raise ValueError(f"unknown solver {solver!r}; choose from {solver_names()}")
    engine = _ENGINES[solver]
    opts = opts or SolverOptions()
    kind = cfg.criterion or engine.loss
    cache = engine.cache(prob.phi, opts, **solver_kwargs)
    n_fact = int(isinstance(cache, CachedSolver) and cache.factor is not None)

    records = []
    lmax = lambda_max(prob, params, engine.loss)
    shape = prob.phi.shape[1:] if isinstance(prob, SensingProblem) else (prob.n, prob.tasks)

    def run(lam, warm):
        if lam >= lmax and solver != "affine":
            # zero is optimal here by construction; the affine set excludes it
            sol = Monitor(opts).finish(np.zeros(shape), True, lam)
        else:
            sol = engine.solve(prob, lam, params, opts.replace(x0=warm), cache,
                               **solver_kwargs)
        crit = criterion_value(_residual(prob, sol.x), params, kind)
        secs = float(sol.trace.seconds[-1]) if len(sol.trace) else 0.0
        records.append(PathRecord(float(lam), crit, float(np.sum(np.abs(sol.x))),
                                  int(np.count_nonzero(sol.x)), sol.iterations, secs))
        nonlocal n_fact
        n_fact += sol.info.get("factorizations", 0)
        return sol, crit

    if lmax == 0:
        zero = Monitor(opts).finish(np.zeros(shape), True, 0.0)
        return PathResult(0.0, zero, [], True, n_fact, np.zeros(0))

    grid = lmax * np.logspace(0.0, -cfg.decades, cfg.grid_points)
    warm = None
    prev = None
    for i, lam in enumerate(grid):
        sol, crit = run(lam, warm)
        if crit <= cfg.epsilon:
            if i == 0:
                return _finish(lam, sol, records, True, n_fact, grid)
            lo, lo_sol = lam, sol
            hi = grid[i - 1]
            while hi / lo - 1.0 > cfg.bisect_rel_width:
                mid = np.sqrt(hi * lo)
                msol, mcrit = run(mid, lo_sol.x)
                if mcrit <= cfg.epsilon:
                    lo, lo_sol = mid, msol
                else:
                    hi = mid
            return _finish(lo, lo_sol, records, True, n_fact, grid)
        warm = sol.x
        prev = sol
    return _finish(grid[-1], prev, records, False, n_fact, grid)


def _finish(lam, sol, records, met, n_fact, grid):
    records = sorted(records, key=lambda r: -r.lam)
    return PathResult(float(lam), sol, records, met, n_fact, grid)


def write_path_csv(result: PathResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda", "criterion", "l1_norm", "nnz", "iterations", "seconds"])
        for r in result.records:
            w.writerow([repr(r.lam), repr(r.criterion), repr(r.l1_norm), r.nnz,
                        r.iterations, f"{r.seconds:.6f}"])
