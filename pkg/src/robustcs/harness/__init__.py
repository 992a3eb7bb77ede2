"""Synthetic random-bars studies: data generation, Haar transform, scoring, CLI."""

from .data import (Cauchy, Gaussian, GaussianMixture, apply_noise, gen_bar_sequence,
                   gen_random_bars, gen_sensing_matrix, psnr, sub_rng)
from .experiment import ConfigError, ExperimentConfig, make_data, run_experiment
from .wavelets import haar2d, ihaar2d

__all__ = [
    "Cauchy", "Gaussian", "GaussianMixture", "apply_noise", "gen_bar_sequence",
    "gen_random_bars", "gen_sensing_matrix", "psnr", "sub_rng",
    "ConfigError", "ExperimentConfig", "make_data", "run_experiment",
    "haar2d", "ihaar2d",
]
