"""Orthonormal multi-level 2-D Haar transform (full depth)."""

import numpy as np

__all__ = ["haar2d", "ihaar2d", "is_power_of_two"]

_S = 1.0 / np.sqrt(2.0)


def is_power_of_two(n) -> bool:
    n = int(n)
    return n >= 1 and (n & (n - 1)) == 0


def _check_shape(h, w):
    if not (is_power_of_two(h) and is_power_of_two(w)):
        raise ValueError(f"Haar transform needs power-of-two dimensions, got {h}x{w}")


def _levels(h, w):
    # block sizes visited by the analysis, coarsest last
    sizes = []
    while h > 1 or w > 1:
        sizes.append((h, w))
        h, w = max(h // 2, 1), max(w // 2, 1)
    return sizes


def _fwd(a, axis):
    a = np.moveaxis(a, axis, 0)
    even, odd = a[0::2], a[1::2]
    out = np.concatenate([(even + odd) * _S, (even - odd) * _S])
    return np.moveaxis(out, 0, axis)


def _inv(a, axis):
    a = np.moveaxis(a, axis, 0)
    half = a.shape[0] // 2
    s, d = a[:half], a[half:]
    out = np.empty_like(a)
    out[0::2] = (s + d) * _S
    out[1::2] = (s - d) * _S
    return np.moveaxis(out, 0, axis)


def haar2d(frame) -> np.ndarray:
    """Analysis: image (H x W) to a coefficient vector of length H*W.

    Coefficients are laid out in the usual pyramid arrangement (approximation
    in the top-left corner) and flattened row-major.
    """
    a = np.array(frame, dtype=float)
    if a.ndim != 2:
        raise ValueError("frame must be 2-D")
    h, w = a.shape
    _check_shape(h, w)
    for bh, bw in _levels(h, w):
        block = a[:bh, :bw]
        if bh > 1:
            block = _fwd(block, 0)
        if bw > 1:
            block = _fwd(block, 1)
        a[:bh, :bw] = block
    return a.reshape(-1)


def ihaar2d(coeffs, h: int, w: int) -> np.ndarray:
    """Synthesis: inverse of :func:`haar2d`."""
    _check_shape(h, w)
    a = np.array(coeffs, dtype=float).reshape(h, w)
    for bh, bw in reversed(_levels(h, w)):
        block = a[:bh, :bw]
        if bw > 1:
            block = _inv(block, 1)
        if bh > 1:
            block = _inv(block, 0)
        a[:bh, :bw] = block
    return a
