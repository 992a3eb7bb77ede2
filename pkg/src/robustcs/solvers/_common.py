"""Options, iteration traces and stopping rules shared by every solver."""

import dataclasses
import enum
import time
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "Status",
    "SolverOptions",
    "IterationRecord",
    "SolverTrace",
    "Solution",
    "admm_threshold",
    "check_stopping",
    "CERTIFICATE_FACTOR",
]


# a converged robust solve has dist(0, subdifferential) <= this * abs_tol
CERTIFICATE_FACTOR = 10.0


class Status(str, enum.Enum):
    CONTINUE = "continue"
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True)
class SolverOptions:
    """Penalty, step and termination settings.

    ``eta2`` defaults to ``eta`` for the two-constraint variants. ``x0=None``
    starts from zeros; a supplied ``x0`` warm-starts the ADMM dual at the
    value consistent with the x-step fixed point.
    """

    eta: float = 2.0
    eta2: Optional[float] = None
    mu: float = 1.0
    beta: float = 0.0
    max_iter: int = 5000
    abs_tol: float = 1e-4
    rel_tol: float = 1e-2
    x0: Optional[np.ndarray] = None
    t0: float = 1.0
    stall_window: int = 100

    def __post_init__(self):
        for name in ("eta", "mu", "abs_tol", "rel_tol", "t0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.eta2 is not None and not self.eta2 > 0:
            raise ValueError("eta2 must be positive")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")

    @property
    def second_penalty(self) -> float:
        return self.eta if self.eta2 is None else self.eta2

    def replace(self, **changes) -> "SolverOptions":
        return dataclasses.replace(self, **changes)

    def start(self, shape) -> np.ndarray:
        if self.x0 is None:
            return np.zeros(shape)
        shape = (shape,) if np.ndim(shape) == 0 else tuple(shape)
        x0 = np.array(self.x0, dtype=float)
        if x0.shape != shape:
            raise ValueError(f"x0 has shape {x0.shape}, expected {shape}")
        return x0


class IterationRecord(NamedTuple):
    objective: float
    primal: Tuple[float, ...]
    dual: Tuple[float, ...]
    eps_primal: Tuple[float, ...]
    eps_dual: Tuple[float, ...]
    seconds: float


@dataclass
class SolverTrace:
    records: List[IterationRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def append(self, record: IterationRecord):
        if not np.isfinite(record.objective):
            raise FloatingPointError("objective became non-finite")
        self.records.append(record)

    @property
    def objective(self) -> np.ndarray:
        return np.array([r.objective for r in self.records])

    @property
    def seconds(self) -> np.ndarray:
        return np.array([r.seconds for r in self.records])

    @property
    def primal(self) -> np.ndarray:
        return np.array([r.primal for r in self.records])

    @property
    def dual(self) -> np.ndarray:
        return np.array([r.dual for r in self.records])


@dataclass
class Solution:
    x: np.ndarray
    status: Status
    trace: SolverTrace
    final_lambda: float
    stalled: bool = False
    info: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return len(self.trace)

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


def admm_threshold(n: int, opts: SolverOptions, scale: float) -> float:
    """``sqrt(n) * abs_tol + rel_tol * scale``."""
    return np.sqrt(n) * opts.abs_tol + opts.rel_tol * scale


def check_stopping(trace: SolverTrace) -> Status:
    """Converged when every residual in the last record is within its threshold."""
    if len(trace) == 0:
        raise ValueError("no iterations recorded")
    rec = trace.records[-1]
    ok = all(r <= e for r, e in zip(rec.primal, rec.eps_primal))
    ok = ok and all(d <= e for d, e in zip(rec.dual, rec.eps_dual))
    return Status.CONVERGED if ok else Status.CONTINUE


class Monitor:
    """Records iterations, applies :func:`check_stopping`, flags stalls."""

    def __init__(self, opts: SolverOptions):
        self.opts = opts
        self.trace = SolverTrace()
        self._t0 = time.perf_counter()
        self._best = np.inf
        self._best_at = 0
        self.stalled = False
        self.certificate = None

    def record(self, objective, primal: Sequence[float], dual: Sequence[float],
               eps_primal: Sequence[float], eps_dual: Sequence[float],
               certify=None) -> bool:
        """Append one iteration; True when the run may stop.

        ``certify`` (optional) returns the optimality residual of the current
        iterate. It is evaluated only once the residual tests pass, and
        convergence then also requires it to be at most ``10 * abs_tol``.
        """
        self.trace.append(IterationRecord(
            float(objective), tuple(map(float, primal)), tuple(map(float, dual)),
            tuple(map(float, eps_primal)), tuple(map(float, eps_dual)),
            time.perf_counter() - self._t0))
        k = len(self.trace)
        if primal:
            p = primal[0]
            if p < self._best:
                self._best, self._best_at = p, k
            elif k - self._best_at >= self.opts.stall_window:
                self.stalled = True
        if check_stopping(self.trace) is not Status.CONVERGED:
            return False
        if certify is None:
            return True
        self.certificate = float(certify())
        return self.certificate <= CERTIFICATE_FACTOR * self.opts.abs_tol

    def finish(self, result, converged: bool, lam: float, **info) -> Solution:
        status = Status.CONVERGED if converged else Status.MAX_ITERATIONS
        if self.certificate is not None:
            info.setdefault("certificate", self.certificate)
        return Solution(x=result, status=status, trace=self.trace, final_lambda=float(lam),
                        stalled=self.stalled, info=info)


def check_lambda(lam):
    lam = float(lam)
    if not lam > 0 or not np.isfinite(lam):
        raise ValueError(f"lambda must be positive and finite, got {lam}")
    return lam
