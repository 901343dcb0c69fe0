"""Information geometry of diffusion-model spacetime.

A diffusion model's denoising posteriors p(x0 | x_t) at spacetime points
z = (x_t, t) form an exponential family, which pulls the Fisher-Rao metric
back onto the (x, t) domain.  This package computes that geometry: curve
energies and lengths, optimized geodesics, a geodesic distance between data
points, KL profiles, penalized (constrained) curves, probability-flow
solvers, and annealed transition-path sampling driven by geodesics.

Heavy inner loops have numba-compiled kernels with pure-numpy fallbacks;
set DIFFGEO_DISABLE_NUMBA=1 to force the fallbacks.
"""

from .constraints import PenaltySpec, delayed_ramp, low_variance_penalty, optimize_constrained, region_avoid_penalty
from .diffed import DiffEdResult, default_anchor_time, diffed, diffed_matrix
from .errors import ConfigError, DiffgeoError, DomainError, NumericalError
from .geodesic import (
    CubicSplineCurve,
    OptimizerConfig,
    PointParametrizedCurve,
    energy_gradient,
    initialize_spline,
    optimize_geodesic,
    optimize_geodesic_between,
)
from .geometry import (
    DiscretizedCurve,
    ExpFamilyStats,
    curve_energy,
    curve_length,
    expectation_params,
    kl_along_curve,
    natural_params,
    segment_inner_products,
    straight_curve,
    symmetrized_kl,
)
from .models import (
    BoltzmannPotential,
    DenoiserModel,
    GaussianMixture,
    GmmDenoiser,
    MlpDenoiser,
    TrainConfig,
    boltzmann_sample,
    double_well,
    hutchinson_divergence,
    mixture_potential_2d,
    three_mode_1d,
    train_denoiser,
)
from .optim import Adam
from .pfode import Trajectory, encode, pullback_straightness, solve_pf_ode, solve_reverse_sde
from .schedule import NoiseSchedule, SpacetimePoint
from .tps import (
    PathReport,
    TransitionChain,
    denoising_energy,
    denoising_energy_grad,
    lower_bound_max_energy,
    report_paths,
    sample_transition_paths,
    straight_chain,
)

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "BoltzmannPotential",
    "ConfigError",
    "CubicSplineCurve",
    "DenoiserModel",
    "DiffEdResult",
    "DiffgeoError",
    "DiscretizedCurve",
    "DomainError",
    "ExpFamilyStats",
    "GaussianMixture",
    "GmmDenoiser",
    "MlpDenoiser",
    "NoiseSchedule",
    "NumericalError",
    "OptimizerConfig",
    "PathReport",
    "PenaltySpec",
    "PointParametrizedCurve",
    "SpacetimePoint",
    "TrainConfig",
    "Trajectory",
    "TransitionChain",
    "boltzmann_sample",
    "curve_energy",
    "curve_length",
    "default_anchor_time",
    "delayed_ramp",
    "denoising_energy",
    "denoising_energy_grad",
    "diffed",
    "diffed_matrix",
    "double_well",
    "encode",
    "energy_gradient",
    "expectation_params",
    "hutchinson_divergence",
    "initialize_spline",
    "kl_along_curve",
    "low_variance_penalty",
    "lower_bound_max_energy",
    "mixture_potential_2d",
    "natural_params",
    "optimize_constrained",
    "optimize_geodesic",
    "optimize_geodesic_between",
    "pullback_straightness",
    "region_avoid_penalty",
    "report_paths",
    "sample_transition_paths",
    "segment_inner_products",
    "solve_pf_ode",
    "solve_reverse_sde",
    "straight_chain",
    "straight_curve",
    "symmetrized_kl",
    "three_mode_1d",
    "train_denoiser",
]
