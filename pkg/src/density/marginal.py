"""
Mixture marginals f_g, log-likelihood and posterior means.
"""

import math

import numpy as np
from scipy.special import logsumexp, softmax

from ..data.dataset import Dataset
from ..kernel import KernelSpec, log_component_matrix
from ..kernel.spec import Observation
from ..mixing import DiscreteMixing
from ..utils.errors import SupportMismatch
from ..utils.helpers import compensated_sum


def _log_weights(g: DiscreteMixing) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(g.weights)


def log_mixture_densities(g: DiscreteMixing, kernel: KernelSpec, X: np.ndarray) -> np.ndarray:
    """log f_g at each row of an (n, d) array of validated observations."""
    return logsumexp(log_component_matrix(kernel, g.atoms, X) + _log_weights(g)[None, :], axis=1)


def log_mixture_density(g: DiscreteMixing, kernel: KernelSpec, x: Observation) -> float:
    X = kernel.check_observations(x)
    if X.shape[0] != 1:
        raise ValueError(f"expected a single observation, got {X.shape[0]}")
    return float(log_mixture_densities(g, kernel, X)[0])


def mixture_density(g: DiscreteMixing, kernel: KernelSpec, x: Observation) -> float:
    """f_g(x) = sum_j w_j p_{theta_j}(x), evaluated by log-sum-exp."""
    return math.exp(log_mixture_density(g, kernel, x))


def log_likelihood(g: DiscreteMixing, kernel: KernelSpec, data: Dataset) -> float:
    """
    l_n(f_g) = sum_i log f_g(X_i) with compensated summation.

    Raises:
        SupportMismatch: f_g underflows to zero at some observation
    """
    data.check_kernel(kernel)
    logf = log_mixture_densities(g, kernel, data.values)
    if not np.all(np.isfinite(logf)):
        row = int(np.argmax(~np.isfinite(logf)))
        raise SupportMismatch(f"mixture density vanishes at observation {row}: {data.values[row].tolist()}")
    return compensated_sum(logf)


def posterior_weights(g: DiscreteMixing, kernel: KernelSpec, X: np.ndarray) -> np.ndarray:
    """(n, J) posterior atom probabilities given each row of X."""
    logits = log_component_matrix(kernel, g.atoms, X) + _log_weights(g)[None, :]
    if not np.all(np.isfinite(logsumexp(logits, axis=1))):
        raise SupportMismatch("posterior mean denominator vanishes")
    return softmax(logits, axis=1)


def posterior_means(g: DiscreteMixing, kernel: KernelSpec, X: np.ndarray) -> np.ndarray:
    """E_g[theta | x] for each row, shape (n, d)."""
    return posterior_weights(g, kernel, X) @ g.atoms


def posterior_mean(g: DiscreteMixing, kernel: KernelSpec, x: Observation) -> np.ndarray:
    """
    Posterior mean sum_j w_j theta_j p_{theta_j}(x) / f_g(x) for one observation.

    Posterior probabilities are normalized in log-domain, so the ratio is
    formed from nonnegative weights and never from cancelling terms.
    """
    X = kernel.check_observations(x)
    if X.shape[0] != 1:
        raise ValueError(f"expected a single observation, got {X.shape[0]}")
    return posterior_means(g, kernel, X)[0]
