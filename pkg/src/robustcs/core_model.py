"""Measurement model, Huber loss and the quadratic majorization shared by the solvers.

The robust data-fit term is

    g(x) = sum_i rho(y_i - (Phi x)_i)

with Huber's penalty ``rho`` (quadratic inside ``[-c, c]``, linear outside) and
its derivative ``psi``, the clipped identity. ``c = k * nu**2``.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "SensingProblem",
    "HuberParams",
    "ModifiedResiduals",
    "IterativelyReweighted",
    "huber_rho",
    "huber_psi",
    "robust_loss",
    "robust_grad",
    "estimate_scale_mad",
    "irls_weights",
    "majorization_point",
    "majorization_constant",
    "surrogate_loss",
]

MAD_CONSISTENCY = 1.4826
# classical 95%-efficiency constant for Huber's estimator
HUBER_TUNING = 1.345


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class SensingProblem:
    """Dense sensing operator ``phi`` (M x N) and measurements ``y`` (length M)."""

    phi: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        if phi.ndim == 1:
            phi = phi[np.newaxis, :]
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if phi.ndim != 2 or phi.shape[0] < 1 or phi.shape[1] < 1:
            raise DimensionError("phi must be a non-empty 2-D array")
        if y.shape[0] != phi.shape[0]:
            raise DimensionError(
                f"y has length {y.shape[0]} but phi has {phi.shape[0]} rows")
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(y))):
            raise ValueError("phi and y must be finite")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "y", y)

    @property
    def m(self) -> int:
        return self.phi.shape[0]

    @property
    def n(self) -> int:
        return self.phi.shape[1]

    def check_x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise DimensionError(f"expected x of shape ({self.n},), got {x.shape}")
        return x

    def residual(self, x) -> np.ndarray:
        """``y - phi @ x``."""
        return self.y - self.phi @ self.check_x(x)


@dataclass(frozen=True)
class HuberParams:
    """Huber loss configuration; the threshold ``c = k * nu**2`` is derived.

    ``k = inf`` gives the pure quadratic loss (plain CS).
    """

    k: float
    nu: float = 1.0

    def __post_init__(self):
        if not (self.k > 0) or np.isnan(self.k):
            raise ValueError(f"k must be positive, got {self.k}")
        if not (self.nu > 0) or not np.isfinite(self.nu):
            raise ValueError(f"nu must be positive and finite, got {self.nu}")

    @property
    def c(self) -> float:
        return self.k * self.nu ** 2

    @property
    def is_quadratic(self) -> bool:
        return np.isinf(self.c)

    @classmethod
    def from_threshold(cls, c: float, nu: float = 1.0) -> "HuberParams":
        return cls(k=c / nu ** 2, nu=nu)

    @classmethod
    def from_scale(cls, nu: float, tuning: float = HUBER_TUNING) -> "HuberParams":
        """Threshold ``c = tuning * nu``, i.e. ``k = tuning / nu``."""
        return cls(k=tuning / nu, nu=nu)

    @classmethod
    def from_residual(cls, r, tuning: float = HUBER_TUNING,
                      floor: float = 1e-12) -> "HuberParams":
        """Scale estimated once by MAD, threshold ``c = tuning * nu``."""
        return cls.from_scale(estimate_scale_mad(r, floor=floor), tuning)

    @classmethod
    def quadratic(cls) -> "HuberParams":
        return cls(k=np.inf, nu=1.0)


@dataclass(frozen=True)
class ModifiedResiduals:
    mu: float = 1.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")


@dataclass(frozen=True)
class IterativelyReweighted:
    epsilon_floor: float = 1e-12

    def __post_init__(self):
        if not self.epsilon_floor > 0:
            raise ValueError("epsilon_floor must be positive")


WeightScheme = Union[ModifiedResiduals, IterativelyReweighted]


def _finite(r):
    r = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r)):
        raise ValueError("residual contains non-finite values")
    return r


def _scalar_like(template, value):
    return float(value) if np.ndim(template) == 0 else value


def huber_rho(r, params: HuberParams):
    """Huber penalty, elementwise.

    ``r**2 / 2`` for ``|r| <= c`` and ``c|r| - c**2 / 2`` beyond.
    """
    r = _finite(r)
    c = params.c
    if np.isinf(c):
        return _scalar_like(r, 0.5 * r * r)
    a = np.abs(r)
    out = np.where(a <= c, 0.5 * r * r, c * a - 0.5 * c * c)
    return _scalar_like(r, out)


def huber_psi(r, params: HuberParams):
    """Derivative of the Huber penalty: ``r`` clipped to ``[-c, c]``."""
    r = _finite(r)
    return _scalar_like(r, np.clip(r, -params.c, params.c))


def robust_loss(x, prob: SensingProblem, params: HuberParams) -> float:
    return float(np.sum(huber_rho(prob.residual(x), params)))


def robust_grad(x, prob: SensingProblem, params: HuberParams) -> np.ndarray:
    """Gradient of the robust loss, ``phi.T @ psi(phi @ x - y)``."""
    x = prob.check_x(x)
    return prob.phi.T @ huber_psi(prob.phi @ x - prob.y, params)


def estimate_scale_mad(r, floor: float = 1e-12) -> float:
    """Gaussian-consistent MAD scale estimate.

    Falls back to ``1.4826 * median(|r|)`` when the MAD is exactly zero, and to
    ``floor`` if that is zero too.
    """
    r = np.asarray(r, dtype=float).reshape(-1)
    if r.size == 0:
        raise ValueError("cannot estimate scale of an empty residual")
    mad = np.median(np.abs(r - np.median(r)))
    if mad == 0:
        mad = np.median(np.abs(r))
    if mad == 0:
        return float(floor)
    return float(MAD_CONSISTENCY * mad)


def irls_weights(r, params: HuberParams, scheme: WeightScheme) -> np.ndarray:
    """Diagonal of the weight matrix ``W`` for the quadratic majorizer."""
    r = _finite(r).reshape(-1)
    if isinstance(scheme, ModifiedResiduals):
        return np.full(r.shape, float(scheme.mu))
    if isinstance(scheme, IterativelyReweighted):
        w = np.ones_like(r)
        big = np.abs(r) >= scheme.epsilon_floor
        w[big] = huber_psi(r[big], params) / r[big]
        return w
    raise TypeError(f"unknown weight scheme {scheme!r}")


def _check_weights(w, m):
    w = np.asarray(w, dtype=float)
    if w.ndim == 0:
        w = np.full(m, float(w))
    if w.shape != (m,):
        raise DimensionError(f"weights must have length {m}")
    if np.any(w <= 0):
        raise ValueError("all weights must be positive")
    return w


def majorization_point(x, prob: SensingProblem, params: HuberParams, w) -> np.ndarray:
    """``v = W^-1 psi(y - phi x) + phi x``."""
    x = prob.check_x(x)
    w = _check_weights(w, prob.m)
    phix = prob.phi @ x
    return huber_psi(prob.y - phix, params) / w + phix


def majorization_constant(x, prob: SensingProblem, params: HuberParams, w) -> float:
    w = _check_weights(w, prob.m)
    p = huber_psi(prob.residual(x), params)
    return robust_loss(x, prob, params) - 0.5 * float(np.sum(p * p / w))


def surrogate_loss(x_new, x, prob: SensingProblem, params: HuberParams, w) -> float:
    """Quadratic majorizer of the robust loss expanded at ``x``, evaluated at ``x_new``."""
    w = _check_weights(w, prob.m)
    v = majorization_point(x, prob, params, w)
    d = v - prob.phi @ prob.check_x(x_new)
    return 0.5 * float(np.sum(w * d * d)) + majorization_constant(x, prob, params, w)
