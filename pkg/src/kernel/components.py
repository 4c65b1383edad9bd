"""
Component densities p_theta(x) of the product Gaussian/Poisson kernel.
"""

import math

import numpy as np
from scipy.special import gammaln, xlogy

from .spec import KernelSpec, Observation

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def log_component_matrix(kernel: KernelSpec, atoms: np.ndarray, X: np.ndarray) -> np.ndarray:
    """
    Log component densities for every (observation, atom) pair.

    Args:
        kernel: Kernel specification
        atoms: (J, d) array of parameters
        X: (n, d) array of validated observations

    Returns:
        (n, J) array with entry [i, j] = log p_{atoms[j]}(X[i])
    """
    atoms = np.asarray(atoms, dtype=float).reshape(-1, kernel.d)
    X = np.asarray(X, dtype=float).reshape(-1, kernel.d)
    out = np.zeros((X.shape[0], atoms.shape[0]))
    for l in range(kernel.d):
        x = X[:, l][:, None]
        t = atoms[:, l][None, :]
        if kernel.is_gaussian(l):
            out += -0.5 * (x - t) ** 2 - LOG_SQRT_2PI
        else:
            out += xlogy(x, t) - t - gammaln(x + 1.0)
    return out


def log_component_density(kernel: KernelSpec, theta: Observation, x: Observation) -> float:
    """Exact log p_theta(x) for one observation."""
    t = kernel.check_theta(theta)
    X = kernel.check_observations(x)
    if X.shape[0] != 1:
        raise ValueError(f"expected a single observation, got {X.shape[0]}")
    return float(log_component_matrix(kernel, t[None, :], X)[0, 0])


def component_density(kernel: KernelSpec, theta: Observation, x: Observation) -> float:
    """
    Product density p_theta(x) = prod_l p_{theta_l}(x_l).

    Args:
        kernel: Kernel specification
        theta: Parameter inside the box
        x: One observation (integer and nonnegative on Poisson coordinates)

    Returns:
        Density value (underflows to 0.0 far in the tails)
    """
    return math.exp(log_component_density(kernel, theta, x))
