"""Spectral bound for the FISTA step and cached solvers for ``(mu Phi^T Phi + Q) x = q``.

For a fat ``Phi`` (M < N) the N x N system is never formed. The matrix
inversion lemma

    (mu Phi^T Phi + Q)^-1 = Q^-1 - Q^-1 Phi^T P^-1 (mu Phi Q^-1),
    P = I + mu Phi Q^-1 Phi^T,

reduces the work to one Cholesky factorization of the M x M matrix ``P``. The
factor depends only on (Phi, mu, Q), so one object serves a whole
regularization path.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import cho_solve
from scipy.linalg.lapack import dpotrf

__all__ = [
    "SpectralBound",
    "spectral_bound",
    "QSpec",
    "CachedSolver",
    "build_cached_solver",
    "cached_solve",
    "NotPositiveDefiniteError",
]


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    def __init__(self, pivot):
        self.pivot = pivot
        super().__init__(f"matrix is not positive definite (failed at pivot {pivot})")


@dataclass(frozen=True)
class SpectralBound:
    lambda_max: float
    iterations_used: int
    is_zero: bool = False


def spectral_bound(phi, tol: float = 1e-8, max_iter: int = 10000,
                   seed: int = 0) -> SpectralBound:
    """Largest eigenvalue of ``phi.T @ phi`` by seeded power iteration.

    Iterates on the Gram matrix of the smaller side. An all-zero ``phi``
    returns ``lambda_max = 0`` with ``is_zero`` set.
    """
    phi = np.asarray(phi, dtype=float)
    if not np.any(phi):
        return SpectralBound(0.0, 0, True)
    m, n = phi.shape
    gram = phi @ phi.T if m <= n else phi.T @ phi
    rng = np.random.default_rng(seed)
    b = rng.standard_normal(gram.shape[0])
    b /= np.linalg.norm(b)
    est = 0.0
    for it in range(1, max_iter + 1):
        gb = gram @ b
        new = float(b @ gb)
        nrm = np.linalg.norm(gb)
        if nrm == 0:
            # unlucky start in the null space
            b = rng.standard_normal(gram.shape[0])
            b /= np.linalg.norm(b)
            continue
        b = gb / nrm
        if abs(new - est) <= tol * abs(new):
            return SpectralBound(new, it)
        est = new
    return SpectralBound(est, max_iter)


@dataclass(frozen=True)
class QSpec:
    """``Q = rho1 * I + rho2 * c c^T`` (rank-one part optional)."""

    rho1: float
    rank_one: Optional[Tuple[float, np.ndarray]] = None

    def __post_init__(self):
        if not self.rho1 > 0:
            raise ValueError("rho1 must be positive")
        if self.rank_one is not None:
            rho2, c = self.rank_one
            c = np.asarray(c, dtype=float).reshape(-1)
            if not rho2 > 0:
                raise ValueError("rho2 must be positive")
            if not np.all(np.isfinite(c)):
                raise ValueError("c must be finite")
            object.__setattr__(self, "rank_one", (float(rho2), c))

    @property
    def gamma(self) -> float:
        # Sherman-Morrison coefficient of Q^-1 = I/rho1 - gamma c c^T
        if self.rank_one is None:
            return 0.0
        rho2, c = self.rank_one
        return rho2 / (self.rho1 * (self.rho1 + rho2 * float(c @ c)))

    def matrix(self, n: int) -> np.ndarray:
        q = self.rho1 * np.eye(n)
        if self.rank_one is not None:
            rho2, c = self.rank_one
            q += rho2 * np.outer(c, c)
        return q

    def apply_inverse(self, q):
        q = np.asarray(q, dtype=float)
        out = q / self.rho1
        if self.rank_one is not None:
            c = self.rank_one[1]
            if q.ndim == 1:
                out = out - self.gamma * c * (c @ q)
            else:
                out = out - self.gamma * np.outer(c, c @ q)
        return out


@dataclass(frozen=True)
class CachedSolver:
    phi: np.ndarray
    mu: float
    qspec: QSpec
    factor: Optional[np.ndarray]
    mode: str  # "q-only", "woodbury" or "direct"

    @property
    def n(self) -> int:
        return self.phi.shape[1]


def _cholesky(a):
    c, info = dpotrf(a, lower=1, clean=1)
    if info > 0:
        raise NotPositiveDefiniteError(info)
    if info < 0:
        raise ValueError(f"illegal argument {-info} to dpotrf")
    return c


def build_cached_solver(phi, mu: float, qspec: QSpec) -> CachedSolver:
    """Factor once for repeated solves of ``(mu Phi^T Phi + Q) x = q``."""
    phi = np.asarray(phi, dtype=float)
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    m, n = phi.shape
    if qspec.rank_one is not None and qspec.rank_one[1].shape != (n,):
        raise ValueError(f"rank-one vector must have length {n}")
    if mu == 0 or not np.any(phi):
        return CachedSolver(phi, float(mu), qspec, None, "q-only")
    if m < n:
        qinv_phit = qspec.apply_inverse(phi.T)
        p = np.eye(m) + mu * (phi @ qinv_phit)
        return CachedSolver(phi, float(mu), qspec, _cholesky(p), "woodbury")
    h = mu * (phi.T @ phi) + qspec.matrix(n)
    return CachedSolver(phi, float(mu), qspec, _cholesky(h), "direct")


def cached_solve(solver: CachedSolver, q) -> np.ndarray:
    """Return ``(mu Phi^T Phi + Q)^-1 q``; ``q`` may hold several columns."""
    q = np.asarray(q, dtype=float)
    if q.shape[0] != solver.n or q.ndim > 2:
        raise ValueError(f"q must have {solver.n} rows, got shape {q.shape}")
    if solver.mode == "q-only":
        return solver.qspec.apply_inverse(q)
    if solver.mode == "direct":
        return cho_solve((solver.factor, True), q, check_finite=False)
    w = solver.qspec.apply_inverse(q)
    s = cho_solve((solver.factor, True), solver.mu * (solver.phi @ w),
                  check_finite=False)
    return solver.qspec.apply_inverse(q - solver.phi.T @ s)
