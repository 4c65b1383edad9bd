"""
Drawing i.i.d. samples from the mixture model.
"""

import numpy as np

from ..data.dataset import Dataset
from ..kernel import KernelSpec
from ..utils.helpers import make_rng
from .distribution import DiscreteMixing, MixingDescriptor


def draw_parameters(g: MixingDescriptor, n: int, rng: np.random.Generator) -> np.ndarray:
    """Latent theta_i for n rows."""
    if isinstance(g, DiscreteMixing):
        index = rng.choice(g.support_size, size=n, p=g.weights)
        return g.atoms[index]
    return g.draw(rng, n)


def sample(g: MixingDescriptor, kernel: KernelSpec, n: int, seed: int, stream: int = 0) -> Dataset:
    """
    Sample n observations from f_g.

    Each row draws theta from g, then Normal(theta_l, 1) on Gaussian
    coordinates and Poisson(theta_l) on count coordinates. Randomness comes
    from a Philox stream keyed by (seed, stream), so equal keys give
    bitwise-identical datasets.
    """
    if n < 1:
        raise ValueError(f"sample size must be positive, got {n}")
    if g.d != kernel.d:
        raise ValueError(f"mixing has d={g.d}, kernel has d={kernel.d}")

    rng = make_rng(seed, stream)
    theta = draw_parameters(g, n, rng)
    values = np.empty((n, kernel.d))
    for l in range(kernel.d):
        if kernel.is_gaussian(l):
            values[:, l] = theta[:, l] + rng.standard_normal(n)
        else:
            values[:, l] = rng.poisson(theta[:, l])
    return Dataset(values=values, b=kernel.b)
