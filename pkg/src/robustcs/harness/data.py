"""Synthetic images, sensing matrices, measurement noise and PSNR."""

import zlib
from dataclasses import dataclass
from typing import Union

import numpy as np

from .wavelets import is_power_of_two

__all__ = [
    "sub_rng",
    "gen_random_bars",
    "gen_bar_sequence",
    "gen_sensing_matrix",
    "Gaussian",
    "GaussianMixture",
    "Cauchy",
    "apply_noise",
    "psnr",
]


def sub_rng(seed: int, name: str) -> np.random.Generator:
    """Independent stream for one named consumer of an experiment seed."""
    return np.random.default_rng([int(seed), zlib.crc32(name.encode())])


def _check_size(size):
    if not is_power_of_two(size) or size < 8:
        raise ValueError(f"size must be a power of two >= 8, got {size}")


def gen_random_bars(size: int, n_bars: int, seed: int) -> np.ndarray:
    """Black ``size x size`` frame with ``n_bars`` horizontal or vertical bars.

    Bars are 1-3 pixels thick, span between half and all of the frame, and
    have intensity in [0.5, 1]; overlaps keep the brighter value.
    """
    _check_size(size)
    if n_bars < 0:
        raise ValueError("n_bars must be nonnegative")
    rng = np.random.default_rng(seed)
    img = np.zeros((size, size))
    for _ in range(n_bars):
        vertical = rng.random() < 0.5
        thick = int(rng.integers(1, 4))
        pos = int(rng.integers(0, size - thick + 1))
        length = int(rng.integers(size // 2, size + 1))
        start = int(rng.integers(0, size - length + 1))
        level = rng.uniform(0.5, 1.0)
        if vertical:
            sl = img[start:start + length, pos:pos + thick]
        else:
            sl = img[pos:pos + thick, start:start + length]
        np.maximum(sl, level, out=sl)
    return img


def gen_bar_sequence(size: int, n_static_bars: int, n_frames: int, block_size: int,
                     seed: int, level: float = 1.0):
    """Static random bars plus a square block sliding left to right.

    The block starts in column 0 at a seeded row and moves by a fixed step per
    frame so that it ends at the right edge on the last frame.
    """
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    if not 0 <= block_size <= size:
        raise ValueError("block_size must be within the frame")
    background = gen_random_bars(size, n_static_bars, seed)
    if block_size == 0:
        return [background.copy() for _ in range(n_frames)]
    rng = np.random.default_rng([seed, 1])
    row = int(rng.integers(0, size - block_size + 1))
    travel = size - block_size
    step = travel // (n_frames - 1) if n_frames > 1 else 0
    frames = []
    for f in range(n_frames):
        img = background.copy()
        col = min(f * step, travel)
        img[row:row + block_size, col:col + block_size] = level
        frames.append(img)
    return frames


def gen_sensing_matrix(m: int, n: int, seed: int, orthogonal: bool = False) -> np.ndarray:
    """Gaussian sensing matrix with entries N(0, 1/m).

    ``orthogonal=True`` returns orthonormal rows instead (requires m <= n).
    """
    if m < 1 or n < 1:
        raise ValueError("matrix dimensions must be positive")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((m, n))
    if not orthogonal:
        return g / np.sqrt(m)
    if m > n:
        raise ValueError("orthogonal rows need m <= n")
    q, r = np.linalg.qr(g.T)
    # fix signs so the result is a deterministic function of g
    return (q * np.sign(np.diag(r))).T


@dataclass(frozen=True)
class Gaussian:
    snr_db: float


@dataclass(frozen=True)
class GaussianMixture:
    """Gaussian noise where a fraction ``contamination`` of entries has ``kappa`` times the variance.

    ``snr_db`` is measured against the total mixture variance.
    """

    snr_db: float
    contamination: float = 0.1
    kappa: float = 100.0

    def __post_init__(self):
        if not 0 <= self.contamination < 1:
            raise ValueError("contamination must lie in [0, 1)")
        if self.kappa < 1:
            raise ValueError("kappa must be >= 1")

    def base_sigma(self, clean) -> float:
        clean = np.asarray(clean, dtype=float)
        p_signal = float(clean @ clean) / clean.size
        var_eff = p_signal / 10.0 ** (self.snr_db / 10.0)
        return float(np.sqrt(var_eff / (1.0 - self.contamination
                                         + self.contamination * self.kappa)))


@dataclass(frozen=True)
class Cauchy:
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")


NoiseSpec = Union[Gaussian, GaussianMixture, Cauchy]


def apply_noise(clean, spec: NoiseSpec, seed: int) -> np.ndarray:
    clean = np.asarray(clean, dtype=float)
    rng = np.random.default_rng(seed)
    if isinstance(spec, Gaussian):
        spec = GaussianMixture(spec.snr_db, 0.0, 1.0)
    if isinstance(spec, GaussianMixture):
        sigma = spec.base_sigma(clean)
        outlier = rng.random(clean.shape) < spec.contamination
        scale = np.where(outlier, sigma * np.sqrt(spec.kappa), sigma)
        return clean + scale * rng.standard_normal(clean.shape)
    if isinstance(spec, Cauchy):
        return clean + spec.scale * rng.standard_cauchy(clean.shape)
    raise TypeError(f"unknown noise spec {spec!r}")


def psnr(reference, recovered, peak: float = 1.0) -> float:
    """``10 log10(peak^2 / MSE)`` in dB; ``inf`` for identical frames."""
    reference = np.asarray(reference, dtype=float)
    recovered = np.asarray(recovered, dtype=float)
    if reference.shape != recovered.shape:
        raise ValueError(f"shape mismatch {reference.shape} vs {recovered.shape}")
    mse = float(np.mean((reference - recovered) ** 2))
    if mse == 0:
        return float("inf")
    return 10.0 * np.log10(peak * peak / mse)
