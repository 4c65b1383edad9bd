from .quadrature import QuadratureScheme, QuadratureGrid, chernoff_cutoff
from .marginal import (
    mixture_density,
    log_mixture_density,
    log_mixture_densities,
    log_likelihood,
    posterior_weights,
    posterior_mean,
    posterior_means,
)
from .divergence import (
    DivergenceResult,
    SeriesBound,
    chi_square,
    chi_square_bounds,
    chi_square_point_mass,
    moment_differences,
    series_ratio,
)
from .functionals import Functional, FunctionalKind, plugin_functional
from .bayes import PosteriorEnvelope, posterior_mean_mse, posterior_error_envelope

__all__ = [
    "QuadratureScheme",
    "QuadratureGrid",
    "chernoff_cutoff",
    "mixture_density",
    "log_mixture_density",
    "log_mixture_densities",
    "log_likelihood",
    "posterior_weights",
    "posterior_mean",
    "posterior_means",
    "DivergenceResult",
    "SeriesBound",
    "chi_square",
    "chi_square_bounds",
    "chi_square_point_mass",
    "moment_differences",
    "series_ratio",
    "Functional",
    "FunctionalKind",
    "plugin_functional",
    "PosteriorEnvelope",
    "posterior_mean_mse",
    "posterior_error_envelope",
]
