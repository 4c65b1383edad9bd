"""
Normalized score coefficients of a mixture against a reference g0.

The score of f_g relative to f_g0 is s = (f_g / f_g0 - 1) / chi. Around an
atom theta0 of g0 it expands in the orthogonal polynomials of the kernel,
and its coefficients are the moment gaps divided by alpha! chi.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..config import settings
from ..density.divergence import (
    chi_square,
    chi_square_point_mass,
    log_tail_frobenius_bound,
    moment_differences,
    sum_log_series,
)
from ..density.marginal import log_mixture_densities
from ..density.quadrature import QuadratureScheme
from ..kernel import KernelSpec, MultiIndex, log_component_matrix, orthonormal_poly_table
from ..kernel.spec import Observation
from ..kernel.polynomials import coordinate_scales
from ..mixing import DiscreteMixing, moment_gap
from ..utils.errors import ZeroDivergence
from ..utils.helpers import compensated_sum, log_factorial

LOG = logging.getLogger(__name__)

ZERO_CHI_SQUARE = 1e-14


@dataclass(frozen=True, eq=False)
class ScoreCoefficients:
    """c_alpha = (m_alpha,g - m_alpha,g0) / (alpha! chi) for 1 <= |alpha| <= kmax."""
    theta0: Tuple[float, ...]
    chi: float
    coeffs: Dict[Tuple[int, ...], float]
    kmax: int
    g: DiscreteMixing

    def __getitem__(self, alpha) -> float:
        return self.coeffs[MultiIndex.of(alpha, len(self.theta0)).alpha]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "alpha": [str(MultiIndex(a)) for a in self.coeffs],
            "order": [sum(a) for a in self.coeffs],
            "value": list(self.coeffs.values()),
        })

    def to_csv(self, path: Union[str, Path]) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.17g")


def score_coefficients(
    g: DiscreteMixing,
    g0: DiscreteMixing,
    theta0,
    kernel: KernelSpec,
    kmax: Optional[int] = None,
    scheme: Optional[QuadratureScheme] = None
) -> ScoreCoefficients:
    """
    Score-expansion coefficients of f_g against f_g0 around theta0.

    chi comes from quadrature, or from the closed form when g0 is a single
    atom.

    Raises:
        ValueError: theta0 is not an atom of g0
        ZeroDivergence: chi^2(f_g, f_g0) vanishes
    """
    kmax = kmax or settings.score_kmax
    t0 = kernel.check_theta(theta0)
    if g0.weight_of(t0) <= 0.0:
        raise ValueError(f"theta0 {t0.tolist()} is not an atom of g0")

    if g0.support_size == 1:
        chi2 = chi_square_point_mass(g, t0, kernel)
    else:
        chi2 = chi_square(g, g0, kernel, scheme).chi_square
    if chi2 <= ZERO_CHI_SQUARE:
        raise ZeroDivergence(f"chi-square divergence is {chi2:.3e}; the normalized score is undefined")
    chi = math.sqrt(chi2)

    coeffs = {}
    for k in range(1, kmax + 1):
        for alpha, gap in moment_differences(g, g0, t0, k).items():
            coeffs[alpha] = gap / (math.exp(MultiIndex(alpha).log_factorial) * chi)
    return ScoreCoefficients(theta0=tuple(t0.tolist()), chi=chi, coeffs=coeffs, kmax=kmax, g=g)


def score_eval(sc: ScoreCoefficients, g0: DiscreteMixing, kernel: KernelSpec, x: Observation) -> Tuple[float, float]:
    """
    Truncated score (p_theta0 / f_g0)(x) sum_alpha c_alpha q_alpha(x), and the direct value.

    Returns:
        (truncated, direct) where direct = (f_g / f_g0 - 1)(x) / chi
    """
    X = kernel.check_observations(x)
    if X.shape[0] != 1:
        raise ValueError(f"expected a single observation, got {X.shape[0]}")
    t0 = np.asarray(sc.theta0)
    tables = orthonormal_poly_table(kernel, t0, sc.kmax, X)
    log_a = -np.log(coordinate_scales(kernel, t0))

    terms = []
    for alpha, c in sc.coeffs.items():
        if c == 0.0:
            continue
        # c_alpha q_alpha = c_alpha sqrt(a_alpha alpha!) n_alpha
        scale = math.exp(0.5 * (float(np.dot(alpha, log_a)) + MultiIndex(alpha).log_factorial))
        value = c * scale
        for l, a in enumerate(alpha):
            value *= float(tables[l][a][0])
        terms.append(value)

    log_p0 = float(log_component_matrix(kernel, t0[None, :], X)[0, 0])
    log_f0 = float(log_mixture_densities(g0, kernel, X)[0])
    log_f = float(log_mixture_densities(sc.g, kernel, X)[0])
    truncated = math.exp(log_p0 - log_f0) * compensated_sum(terms)
    direct = math.expm1(log_f - log_f0) / sc.chi
    return truncated, direct


def weighted_norm(sc: ScoreCoefficients, kernel: KernelSpec) -> float:
    """sum_{|alpha| <= kmax} a_alpha alpha! (|alpha| + 1)^d c_alpha^2."""
    t0 = np.asarray(sc.theta0)
    log_a = -np.log(coordinate_scales(kernel, t0))
    terms = []
    for alpha, c in sc.coeffs.items():
        if c == 0.0:
            continue
        log_w = float(np.dot(alpha, log_a)) + MultiIndex(alpha).log_factorial + kernel.d * math.log(sum(alpha) + 1)
        terms.append(math.exp(log_w + 2.0 * math.log(abs(c))))
    return compensated_sum(terms)


def coefficient_tail(sc: ScoreCoefficients, g0: DiscreteMixing, kernel: KernelSpec) -> float:
    """
    Bound on the weighted coefficient mass beyond kmax.

    sum_{k > kmax} (k + 1)^d sup a_k ||m_k,g - m_k,g0||_F^2 / (k! chi^2), with
    Frobenius norms bounded by the moment-comparison growth bound (trivial
    bound up to order 2J).
    """
    t0 = np.asarray(sc.theta0)
    d = kernel.d
    J = g0.support_size
    M = kernel.radius(t0)
    log_sup_a = float(np.max(-np.log(coordinate_scales(kernel, t0))))
    delta = moment_gap(sc.g, g0, t0, 2 * J).delta if d <= 3 else None

    def log_term(k):
        frob = log_tail_frobenius_bound(k, J, M, d, delta if k > 2 * J else None)
        return d * math.log(k + 1) + k * log_sup_a + frob - log_factorial(k) - 2.0 * math.log(sc.chi)

    tail = sum_log_series(log_term, sc.kmax + 1)
    LOG.debug(f"Score coefficient tail beyond kmax={sc.kmax}: {tail:.3e}")
    return tail
