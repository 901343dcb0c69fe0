"""Denoiser models: analytic GMM, Boltzmann-potential toys, trainable MLP."""

from .base import DenoiserModel, denoise_from_score, hutchinson_divergence
from .boltzmann import (
    BoltzmannPotential,
    boltzmann_sample,
    double_well,
    mixture_potential_2d,
)
from .gmm import (
    GaussianMixture,
    GmmDenoiser,
    gmm_log_marginal,
    gmm_score,
    posterior_stats,
    three_mode_1d,
)
from .mlp import MlpDenoiser, sinusoidal_features
from .training import TrainConfig, train_denoiser

__all__ = [
    "DenoiserModel",
    "denoise_from_score",
    "hutchinson_divergence",
    "BoltzmannPotential",
    "boltzmann_sample",
    "double_well",
    "mixture_potential_2d",
    "GaussianMixture",
    "GmmDenoiser",
    "gmm_log_marginal",
    "gmm_score",
    "posterior_stats",
    "three_mode_1d",
    "MlpDenoiser",
    "sinusoidal_features",
    "TrainConfig",
    "train_denoiser",
]
