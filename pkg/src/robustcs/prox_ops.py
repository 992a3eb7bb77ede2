"""Closed-form shrinkage operators."""

import numpy as np

__all__ = ["soft_threshold", "group_shrink", "group_shrink_rows", "elastic_shrink"]


def _check_tau(tau):
    tau = float(tau)
    if not np.isfinite(tau) or tau < 0:
        raise ValueError(f"threshold must be finite and nonnegative, got {tau}")
    return tau


def soft_threshold(v, tau):
    """Elementwise ``sign(v) * max(|v| - tau, 0)``, the prox of ``tau * ||.||_1``."""
    tau = _check_tau(tau)
    v = np.asarray(v, dtype=float)
    out = np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)
    return float(out) if out.ndim == 0 else out


def group_shrink(v, tau):
    """Prox of ``tau * ||.||_2``: scale ``v`` by ``max(||v|| - tau, 0) / ||v||``.

    Returns zeros when ``||v|| <= tau`` (including ``v = 0``).
    """
    tau = _check_tau(tau)
    v = np.asarray(v, dtype=float)
    nrm = np.linalg.norm(v)
    if nrm <= tau:
        return np.zeros_like(v)
    return v * ((nrm - tau) / nrm)


def group_shrink_rows(V, tau):
    """Apply :func:`group_shrink` to every row of ``V``."""
    tau = _check_tau(tau)
    V = np.asarray(V, dtype=float)
    norms = np.linalg.norm(V, axis=1)
    scale = np.zeros_like(norms)
    keep = norms > tau
    scale[keep] = (norms[keep] - tau) / norms[keep]
    return V * scale[:, np.newaxis]


def elastic_shrink(v, lam, beta, L):
    r"""Shrinkage for an l1 plus ridge penalty at step ``1/L``.

    Minimizes ``(L/2)||x - v||^2 + lam*||x||_1 + (beta/2)||x||^2``, whose
    solution is ``soft_threshold(v / (1 + beta/L), lam / (L + beta))``.
    A penalty ``beta' * ||x||^2`` therefore corresponds to ``beta = 2 * beta'``.
    """
    if not L > 0:
        raise ValueError(f"L must be positive, got {L}")
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    v = np.asarray(v, dtype=float)
    return soft_threshold(v / (1.0 + beta / L), lam / (L + beta))
