import numpy as np

from ..core_model import HuberParams, SensingProblem, huber_psi, robust_grad


def optimality_residual(x, prob: SensingProblem, lam: float, params: HuberParams,
                        beta: float = 0.0, ord=np.inf) -> float:
    """Distance from 0 to the subdifferential of the robust objective at ``x``.

    On the support the subgradient is unique (``grad + lam * sign(x)``); off
    the support only the excess ``max(|grad| - lam, 0)`` counts.
    """
    x = prob.check_x(x)
    g = robust_grad(x, prob, params) + 2.0 * beta * x
    on = x != 0
    d = np.where(on, g + lam * np.sign(x), np.maximum(np.abs(g) - lam, 0.0))
    return float(np.linalg.norm(d, ord))


def multitask_optimality_residual(X, phi, Y, lam: float, params: HuberParams) -> float:
    """Row-group analogue of :func:`optimality_residual` for the l2/l1 penalty.

    A nonzero row contributes ``||g_i + lam x_i / ||x_i||||``, a zero row the
    excess ``max(||g_i|| - lam, 0)``; the result is the largest row value.
    """
    G = phi.T @ huber_psi(phi @ X - Y, params)
    norms = np.linalg.norm(X, axis=1)
    on = norms > 0
    scale = np.divide(lam, norms, out=np.zeros_like(norms), where=on)
    d = np.where(on, np.linalg.norm(G + scale[:, np.newaxis] * X, axis=1),
                 np.maximum(np.linalg.norm(G, axis=1) - lam, 0.0))
    return float(np.max(d, initial=0.0))
