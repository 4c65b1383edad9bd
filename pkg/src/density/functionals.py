"""
Plug-in functionals of the mixture marginal.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.stats import norm, poisson

from ..kernel import KernelSpec
from ..mixing import DiscreteMixing
from ..utils.helpers import compensated_sum
from .marginal import log_mixture_densities
from .quadrature import QuadratureScheme


class FunctionalKind(Enum):
    """Supported functionals h of the observation."""
    MEAN = "mean"
    CDF = "cdf"
    PMF = "pmf"


@dataclass(frozen=True)
class Functional:
    """h(x) = x_coord, 1{x_coord <= threshold} or 1{x_coord = threshold}."""
    kind: FunctionalKind
    coord: int = 0
    threshold: float = 0.0

    @classmethod
    def mean(cls, coord: int = 0) -> "Functional":
        return cls(FunctionalKind.MEAN, coord)

    @classmethod
    def cdf(cls, threshold: float, coord: int = 0) -> "Functional":
        return cls(FunctionalKind.CDF, coord, threshold)

    @classmethod
    def pmf(cls, count: int, coord: int = 0) -> "Functional":
        return cls(FunctionalKind.PMF, coord, float(count))


def plugin_functional(
    g: DiscreteMixing,
    kernel: KernelSpec,
    h: Functional,
    scheme: Optional[QuadratureScheme] = None
) -> float:
    """
    Integral of h against f_g.

    The mean is integrated on the quadrature rule; the indicator functionals
    only involve one coordinate marginal and are summed in closed form over
    the atoms.

    Raises:
        ValueError: unsupported functional (e.g. a point mass indicator on a
            Gaussian coordinate)
    """
    if not 0 <= h.coord < kernel.d:
        raise ValueError(f"functional coordinate {h.coord} out of range for d={kernel.d}")
    theta = g.atoms[:, h.coord]
    gaussian = kernel.is_gaussian(h.coord)

    if h.kind is FunctionalKind.MEAN:
        grid = (scheme or QuadratureScheme()).grid(kernel, [g])
        mass = grid.weights * np.exp(log_mixture_densities(g, kernel, grid.points))
        return compensated_sum(mass * grid.points[:, h.coord])

    if h.kind is FunctionalKind.CDF:
        if gaussian:
            probs = norm.cdf(h.threshold - theta)
        else:
            probs = poisson.cdf(math.floor(h.threshold), theta)
        return compensated_sum(g.weights * probs)

    if h.kind is FunctionalKind.PMF:
        if gaussian or h.threshold < 0 or not float(h.threshold).is_integer():
            raise ValueError("point-mass functionals need a Poisson coordinate and a nonnegative integer count")
        return compensated_sum(g.weights * poisson.pmf(int(h.threshold), theta))

    raise ValueError(f"unsupported functional {h.kind}")
