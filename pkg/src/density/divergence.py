"""
Chi-square and squared Hellinger divergences between mixture marginals.

chi_square integrates (f_g / f_g0 - 1)^2 f_g0 on a tensor-product rule and
checks one refinement level. chi_square_bounds sandwiches the same quantity
between moment-series bounds, and chi_square_point_mass gives the closed
form when g0 is a single atom.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.special import logsumexp

from ..kernel import KernelSpec, MultiIndex, multi_indices, orthonormal_poly_table
from ..kernel.polynomials import coordinate_scales
from ..mixing import DiscreteMixing, moment_gap
from ..mixing.moments import log_moment_comparison_factor
from ..utils.errors import QuadratureNonConvergence, SupportMismatch
from ..utils.helpers import compensated_sum, log_factorial
from .marginal import log_mixture_densities
from .quadrature import QuadratureGrid, QuadratureScheme

LOG = logging.getLogger(__name__)

REFINE_RTOL = 1e-6
REFINE_ATOL = 1e-12


@dataclass(frozen=True)
class DivergenceResult:
    """Chi-square and squared Hellinger from the same nodes."""
    chi_square: float
    hellinger_sq: float
    nodes: int

    @property
    def chi(self) -> float:
        return math.sqrt(self.chi_square)


def _log_ratio_on(grid: QuadratureGrid, g: DiscreteMixing, g0: DiscreteMixing, kernel: KernelSpec) -> Tuple[np.ndarray, np.ndarray]:
    logf0 = log_mixture_densities(g0, kernel, grid.points)
    logf = log_mixture_densities(g, kernel, grid.points)
    dead = ~np.isfinite(logf0)
    if np.any(dead & np.isfinite(logf)):
        raise SupportMismatch("f_g0 vanishes on the integration domain where f_g does not")
    log_ratio = np.where(dead, 0.0, logf - np.where(dead, 0.0, logf0))
    return log_ratio, np.where(dead, -np.inf, logf0)


def _divergences_on(grid: QuadratureGrid, g: DiscreteMixing, g0: DiscreteMixing, kernel: KernelSpec) -> Tuple[float, float]:
    log_ratio, logf0 = _log_ratio_on(grid, g, g0, kernel)
    mass = grid.weights * np.exp(logf0)
    chi2 = compensated_sum(mass * np.expm1(log_ratio) ** 2)
    h2 = compensated_sum(mass * np.expm1(0.5 * log_ratio) ** 2)
    return max(chi2, 0.0), max(h2, 0.0)


def _agree(coarse: float, fine: float) -> bool:
    return abs(coarse - fine) <= REFINE_RTOL * abs(fine) + REFINE_ATOL


def chi_square(
    g: DiscreteMixing,
    g0: DiscreteMixing,
    kernel: KernelSpec,
    scheme: Optional[QuadratureScheme] = None,
    check_refinement: bool = True
) -> DivergenceResult:
    """
    chi^2(f_g, f_g0) and H^2(f_g, f_g0) by quadrature.

    Args:
        g: Numerator mixing distribution
        g0: Reference mixing distribution
        kernel: Kernel specification
        scheme: Quadrature rule (defaults from settings)
        check_refinement: Also evaluate on the refined rule and require agreement

    Returns:
        DivergenceResult (values from the finest rule evaluated)

    Raises:
        QuadratureNonConvergence: coarse and refined values disagree by more
            than 1e-6 relative
    """
    scheme = scheme or QuadratureScheme()
    if not check_refinement:
        grid = scheme.grid(kernel, [g, g0], reference=g0)
        chi2, h2 = _divergences_on(grid, g, g0, kernel)
        return DivergenceResult(chi_square=chi2, hellinger_sq=h2, nodes=grid.size)

    grid, fine_grid = scheme.levels(kernel, [g, g0], reference=g0)
    chi2, h2 = _divergences_on(grid, g, g0, kernel)
    fine_chi2, fine_h2 = _divergences_on(fine_grid, g, g0, kernel)
    if not (_agree(chi2, fine_chi2) and _agree(h2, fine_h2)):
        raise QuadratureNonConvergence(
            f"chi-square refinement disagrees: {chi2:.17g} vs {fine_chi2:.17g} "
            f"({grid.size} vs {fine_grid.size} nodes)"
        )
    return DivergenceResult(chi_square=fine_chi2, hellinger_sq=fine_h2, nodes=fine_grid.size)


def chi_square_point_mass(g: DiscreteMixing, theta0, kernel: KernelSpec) -> float:
    """
    Closed-form chi^2(f_g, p_theta0).

    For a single-atom reference the likelihood ratios p_theta / p_theta0 have
    covariance prod_l exp((theta_l - theta0_l)(theta'_l - theta0_l) / V_l)
    minus one, with V_l = 1 (Gaussian) or theta0_l (Poisson).
    """
    t0 = kernel.check_theta(theta0)
    scales = coordinate_scales(kernel, t0)
    u = (g.atoms - t0) / np.sqrt(scales)
    log_w = np.log(g.weights)
    exponents = u @ u.T + log_w[:, None] + log_w[None, :]
    return max(float(np.expm1(logsumexp(exponents))), 0.0)


def _log_norm_consts(kernel: KernelSpec, theta0: np.ndarray) -> np.ndarray:
    return -np.log(coordinate_scales(kernel, theta0))


def moment_differences(g: DiscreteMixing, g0: DiscreteMixing, theta0: np.ndarray, k: int) -> Dict[Tuple[int, ...], float]:
    """m_{alpha,g} - m_{alpha,g0} for every |alpha| = k, summed in one compensated pass."""
    u = np.vstack([g.atoms - theta0, g0.atoms - theta0])
    v = np.concatenate([g.weights, -g0.weights])
    out = {}
    for alpha in multi_indices(g.d, k):
        out[alpha] = compensated_sum(v * np.prod(u ** np.array(alpha), axis=1))
    return out


def series_ratio(g: DiscreteMixing, theta0, kernel: KernelSpec, X: np.ndarray, kmax: int) -> np.ndarray:
    """
    Truncated expansion sum_{1 <= |alpha| <= kmax} m_{alpha,g} q_alpha(x) / alpha!.

    Approximates f_g(x) / p_theta0(x) - 1 at each row of X.
    """
    t0 = kernel.check_theta(theta0)
    X = kernel.check_observations(X)
    tables = orthonormal_poly_table(kernel, t0, kmax, X)
    log_a = _log_norm_consts(kernel, t0)
    u = g.atoms - t0
    total = np.zeros(X.shape[0])
    for k in range(1, kmax + 1):
        for alpha in multi_indices(kernel.d, k):
            m = compensated_sum(g.weights * np.prod(u ** np.array(alpha), axis=1))
            if m == 0.0:
                continue
            scale = math.exp(0.5 * (float(np.dot(alpha, log_a)) - MultiIndex(alpha).log_factorial))
            term = np.ones(X.shape[0])
            for l, a in enumerate(alpha):
                term = term * tables[l][a]
            total += m * scale * term
    return total


@dataclass(frozen=True)
class SeriesBound:
    """Moment-series sandwich lower <= chi^2 <= upper_partial + tail_estimate."""
    theta0: Tuple[float, ...]
    lower: float
    upper_partial: float
    tail_estimate: float
    kmax: int
    C0_bound: float

    @property
    def upper(self) -> float:
        return self.upper_partial + self.tail_estimate

    @property
    def tail_small(self) -> bool:
        return self.tail_estimate <= 1e-3 * max(self.upper_partial, 1e-300)

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["theta0"] = list(self.theta0)
        return out


def log_tail_frobenius_bound(k: int, J: int, M: float, d: int, delta: Optional[float]) -> float:
    """
    log of a bound on ||m_{k,g} - m_{k,g0}||_F^2 for k > 2J.

    The smaller of the moment-comparison growth bound d^k (k (M+1)^{2Jk} Delta)^2
    and the trivial bound (2 M^k)^2.
    """
    trivial = math.log(4.0) + 2.0 * k * math.log(M) if M > 0 else -math.inf
    if delta is None:
        return trivial
    if delta == 0.0:
        return -math.inf
    growth = k * math.log(d) + 2.0 * (log_moment_comparison_factor(k, J, M) + math.log(delta))
    return min(trivial, growth)


def sum_log_series(log_term, start: int, max_terms: int = 200000, rtol: float = 1e-17) -> float:
    """
    Sum exp(log_term(k)) for k >= start until terms stop contributing.

    Stops once terms are decreasing and below rtol of the running sum.
    """
    acc = -math.inf
    prev = math.inf
    for k in range(start, start + max_terms):
        lt = log_term(k)
        if lt == -math.inf:
            break
        acc = np.logaddexp(acc, lt)
        if lt < prev and lt < acc + math.log(rtol):
            break
        prev = lt
    return float(math.exp(acc)) if acc < 709.0 else math.inf


def chi_square_bounds(
    g: DiscreteMixing,
    g0: DiscreteMixing,
    theta0,
    kmax: int,
    kernel: KernelSpec,
    scheme: Optional[QuadratureScheme] = None
) -> SeriesBound:
    """
    Lower and upper moment-series bounds on chi^2(f_g, f_g0).

    lower = max_k (min_{|alpha|=k} a_alpha^2 / int q_alpha^2 f_g0) * max_{|alpha|=k} |dm_alpha|^2
    upper_partial = C0 * sum_{k<=kmax} (max_{|alpha|=k} a_alpha) ||dm_k||_F^2 / k!
    tail_estimate bounds the k > kmax remainder, C0 = 1 / w(theta0).

    Raises:
        ValueError: theta0 is not an atom of g0, or kmax < 2J
    """
    t0 = kernel.check_theta(theta0)
    w0 = g0.weight_of(t0)
    if w0 <= 0.0:
        raise ValueError(f"theta0 {t0.tolist()} is not an atom of g0")
    J = g0.support_size
    if kmax < 2 * J:
        raise ValueError(f"kmax={kmax} must be at least 2J={2 * J}")
    C0 = 1.0 / w0

    scheme = scheme or QuadratureScheme()
    grid = scheme.grid(kernel, [g0], reference=g0)
    f0_mass = grid.weights * np.exp(log_mixture_densities(g0, kernel, grid.points))
    tables = orthonormal_poly_table(kernel, t0, kmax, grid.points)
    log_a = _log_norm_consts(kernel, t0)
    log_sup_a = float(np.max(log_a))

    lower = 0.0
    upper_terms: List[float] = []
    for k in range(1, kmax + 1):
        diffs = moment_differences(g, g0, t0, k)
        sup_abs = max(abs(v) for v in diffs.values())
        frob_over_fact = compensated_sum(
            v * v * math.exp(-MultiIndex(a).log_factorial) for a, v in diffs.items()
        )
        upper_terms.append(math.exp(k * log_sup_a) * frob_over_fact)

        if sup_abs == 0.0:
            continue
        ratios = []
        for alpha in diffs:
            values = np.ones(grid.size)
            for l, a in enumerate(alpha):
                values = values * tables[l][a]
            second = compensated_sum(f0_mass * values ** 2)
            log_ratio = float(np.dot(alpha, log_a)) - MultiIndex(alpha).log_factorial
            ratios.append(math.exp(log_ratio) / second)
        lower = max(lower, min(ratios) * sup_abs ** 2)

    upper_partial = C0 * compensated_sum(upper_terms)

    M = kernel.radius(t0)
    delta = moment_gap(g, g0, t0, max(kmax, 2 * J)).delta if kernel.d <= 3 else None
    d = kernel.d

    def log_tail_term(k):
        return k * log_sup_a + log_tail_frobenius_bound(k, J, M, d, delta) - log_factorial(k)

    tail = C0 * sum_log_series(log_tail_term, kmax + 1)

    bound = SeriesBound(
        theta0=tuple(t0.tolist()),
        lower=lower,
        upper_partial=upper_partial,
        tail_estimate=tail,
        kmax=kmax,
        C0_bound=C0,
    )
    if not bound.tail_small:
        LOG.warning(f"⚠️  Series tail {tail:.3e} is not small against partial sum {upper_partial:.3e} (kmax={kmax})")
    return bound
