"""
Empirical Bayes quantities: posterior-mean risk and the pointwise error envelope.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.special import gammaln, logsumexp

from ..config import settings
from ..kernel import KernelSpec, MultiIndex, normalized_recurrence
from ..kernel.spec import Observation
from ..kernel.polynomials import coordinate_scales
from ..kernel.components import log_component_matrix
from ..mixing import DiscreteMixing, moment_gap
from ..utils.errors import QuadratureNonConvergence, TruncationError
from ..utils.helpers import compensated_sum, log_factorial
from .divergence import (
    REFINE_ATOL,
    REFINE_RTOL,
    log_tail_frobenius_bound,
    moment_differences,
    sum_log_series,
)
from .marginal import log_mixture_densities, posterior_means
from .quadrature import QuadratureGrid, QuadratureScheme

LOG = logging.getLogger(__name__)

# |He_k(t)| <= CRAMER sqrt(k!) exp(t^2 / 4) for all k and real t
CRAMER = 1.086435
ENVELOPE_RTOL = 1e-3
KMAX_LIMIT = {1: 65536, 2: 2048, 3: 512}


def _mse_on(grid: QuadratureGrid, g: DiscreteMixing, g0: DiscreteMixing, kernel: KernelSpec) -> float:
    mass = grid.weights * np.exp(log_mixture_densities(g0, kernel, grid.points))
    diff = posterior_means(g, kernel, grid.points) - posterior_means(g0, kernel, grid.points)
    return compensated_sum(mass * np.sum(diff ** 2, axis=1))


def posterior_mean_mse(
    g: DiscreteMixing,
    g0: DiscreteMixing,
    kernel: KernelSpec,
    scheme: Optional[QuadratureScheme] = None,
    check_refinement: bool = True
) -> float:
    """
    Integrated squared posterior-mean error under f_g0.

    Returns:
        int ||E_g[theta|x] - E_g0[theta|x]||^2 f_g0(x) dmu(x)
    """
    scheme = scheme or QuadratureScheme()
    if not check_refinement:
        return _mse_on(scheme.grid(kernel, [g, g0], reference=g0), g, g0, kernel)
    coarse_grid, fine_grid = scheme.levels(kernel, [g, g0], reference=g0)
    coarse = _mse_on(coarse_grid, g, g0, kernel)
    fine = _mse_on(fine_grid, g, g0, kernel)
    if abs(coarse - fine) > REFINE_RTOL * abs(fine) + REFINE_ATOL:
        raise QuadratureNonConvergence(f"posterior MSE refinement disagrees: {coarse:.17g} vs {fine:.17g}")
    return fine


@dataclass(frozen=True)
class PosteriorEnvelope:
    """h(x) * Delta_g with the slack left by truncating S(x) at kmax."""
    value: float
    slack: float
    kmax: int
    delta: float
    C0_bound: float
    C2_hat: float
    S: float

    @property
    def bound(self) -> float:
        return self.value + self.slack

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _poisson_log_sq_bound(x: int, theta0: float, orders: np.ndarray) -> np.ndarray:
    """
    log of a bound on the squared orthonormal Charlier value at count x.

    |q_a(x)| <= sum_{j <= min(a, x)} C(a, j) x!/(x-j)! theta0^-j, and the
    orthonormal value squares it times theta0^a / a!.
    """
    a = orders.astype(float)[:, None]
    j = np.arange(x + 1, dtype=float)[None, :]
    with np.errstate(invalid="ignore"):
        terms = (
            gammaln(a + 1) - gammaln(j + 1) - gammaln(np.maximum(a - j, 0) + 1)
            + gammaln(x + 1.0) - gammaln(x - j + 1) - j * math.log(theta0)
        )
    terms = np.where(j <= a, terms, -np.inf)
    log_abs = logsumexp(terms, axis=1)
    return 2.0 * log_abs + orders * math.log(theta0) - gammaln(orders + 1.0)


def _coordinate_sequences(kernel: KernelSpec, theta0: np.ndarray, x: np.ndarray, K: int, K_far: int) -> Tuple[List[np.ndarray], List[float]]:
    """
    Per-coordinate sequences beta_l(a), a = 0..K_far, and their sup beyond K_far.

    beta_l(a) is the exact squared orthonormal value for a <= K and an upper
    bound above.
    """
    sequences, sups = [], []
    for l in range(kernel.d):
        gaussian = kernel.is_gaussian(l)
        exact = normalized_recurrence(x[l:l + 1], theta0[l], K, gaussian)[:, 0] ** 2
        far_orders = np.arange(K + 1, K_far + 1)
        if gaussian:
            level = CRAMER ** 2 * math.exp(0.5 * (x[l] - theta0[l]) ** 2)
            bound = np.full(far_orders.shape[0], level)
            beyond = level
        else:
            count = int(x[l])
            bound = np.exp(_poisson_log_sq_bound(count, theta0[l], far_orders))
            # the bound is eventually decreasing in the order
            beyond = float(np.exp(_poisson_log_sq_bound(count, theta0[l], np.arange(K_far + 1, K_far + 401))).max())
        sequence = np.concatenate([exact, bound])
        sequences.append(sequence)
        sups.append(max(float(sequence.max()), beyond))
    return sequences, sups


def _order_weights(orders: np.ndarray, d: int) -> np.ndarray:
    k = orders.astype(float)
    return 1.0 / (np.maximum(k, 1.0) ** 2 * (k + 1.0) ** d)


def _s_squared(kernel: KernelSpec, theta0: np.ndarray, x: np.ndarray, K: int) -> Tuple[float, float]:
    """Truncated sum over k <= K of the S(x)^2 series (without p/f) and a bound on the rest."""
    d = kernel.d
    K_far = 2 * K
    sequences, sups = _coordinate_sequences(kernel, theta0, x, K, K_far)

    exact = sequences[0][:K + 1]
    mixed = sequences[0]
    for seq in sequences[1:]:
        exact = np.convolve(exact, seq[:K + 1])[:K + 1]
        mixed = np.convolve(mixed, seq)[:K_far + 1]

    orders = np.arange(K_far + 1)
    weights = _order_weights(orders, d)
    partial = compensated_sum(weights[:K + 1] * exact)
    near_tail = compensated_sum(weights[K + 1:] * mixed[K + 1:])
    far_tail = float(np.prod(sups)) / (math.factorial(d - 1) * 2.0 * K_far ** 2)
    return partial, near_tail + far_tail


def _c2_series(g: DiscreteMixing, g0: DiscreteMixing, kernel: KernelSpec, theta0: np.ndarray, K: int, delta: float) -> float:
    """
    sum_k (sup_{|alpha| in {k-1,k}} a_alpha) k^2 (k+1)^(d+1) ||dm_k||_F^2 / k!

    Exact Frobenius norms up to min(K, order cap), the moment-comparison
    growth bound beyond.
    """
    d = kernel.d
    J = g0.support_size
    M = kernel.radius(theta0)
    log_sup_a = float(np.max(-np.log(coordinate_scales(kernel, theta0))))
    exact_top = min(K, settings.poly_order_cap)

    def log_weight(k):
        log_s = max((k - 1) * log_sup_a, k * log_sup_a)
        return log_s + 2.0 * math.log(k) + (d + 1) * math.log(k + 1) - log_factorial(k)

    head = []
    for k in range(1, exact_top + 1):
        diffs = moment_differences(g, g0, theta0, k)
        frob_sq = compensated_sum(
            v * v * math.exp(log_factorial(k) - MultiIndex(a).log_factorial) for a, v in diffs.items()
        )
        if frob_sq > 0.0:
            head.append(math.exp(log_weight(k) + math.log(frob_sq)))

    def log_tail_term(k):
        return log_weight(k) + log_tail_frobenius_bound(k, J, M, d, delta)

    return compensated_sum(head) + sum_log_series(log_tail_term, max(exact_top + 1, 2 * J + 1))


def posterior_error_envelope(
    g: DiscreteMixing,
    g0: DiscreteMixing,
    kernel: KernelSpec,
    x: Observation,
    kmax: Optional[int] = None
) -> PosteriorEnvelope:
    """
    Pointwise bound on ||E_g[theta|x] - E_g0[theta|x]||.

    The value is (M + sqrt(d)) sqrt(C0 C2) S(x) Delta_g with theta0 the
    highest-weight atom of g0, C0 = 1/w0, S truncated at kmax and C2 the
    moment series with its growth-bound tail. The true error is at most
    value + slack.

    Args:
        g: Mixing distribution under test
        g0: Finitely discrete reference
        kernel: Kernel specification (d <= 3)
        x: One observation
        kmax: Truncation order, at least 2J + 10; None grows it until the
            slack is within 1e-3 of the partial sum

    Raises:
        TruncationError: the truncation slack stays above 1e-3 of the partial sum
    """
    if kernel.d > 3:
        raise ValueError(f"posterior envelope supports d <= 3, got d={kernel.d}")
    X = kernel.check_observations(x)
    if X.shape[0] != 1:
        raise ValueError(f"expected a single observation, got {X.shape[0]}")
    point = X[0]

    theta0 = g0.highest_weight_atom()
    w0 = g0.weight_of(theta0)
    C0 = 1.0 / w0
    J = g0.support_size
    d = kernel.d
    M = kernel.radius(theta0)
    minimum = 2 * J + 10
    if kmax is not None and kmax < minimum:
        raise ValueError(f"kmax={kmax} must be at least 2J+10={minimum}")

    delta = moment_gap(g, g0, theta0, 2 * J).delta
    if delta == 0.0:
        return PosteriorEnvelope(value=0.0, slack=0.0, kmax=kmax or minimum, delta=0.0, C0_bound=C0, C2_hat=0.0, S=0.0)

    log_p0 = float(log_component_matrix(kernel, theta0[None, :], X)[0, 0])
    log_f0 = float(log_mixture_densities(g0, kernel, X)[0])
    density_ratio = math.exp(log_p0 - log_f0)

    K = kmax or minimum
    limit = KMAX_LIMIT[d]
    while True:
        partial, tail = _s_squared(kernel, theta0, point, K)
        if tail <= ENVELOPE_RTOL * partial:
            break
        if kmax is not None or 2 * K > limit:
            raise TruncationError(
                f"S(x) truncation slack {tail:.3e} exceeds {ENVELOPE_RTOL} of partial sum {partial:.3e} at kmax={K}"
            )
        K *= 2
        LOG.debug(f"Extending envelope truncation to kmax={K}")

    series = _c2_series(g, g0, kernel, theta0, K, delta)
    prefactor = (M + math.sqrt(d)) * math.sqrt(C0 * series)
    S = math.sqrt(density_ratio * partial)
    S_full = math.sqrt(density_ratio * (partial + tail))
    return PosteriorEnvelope(
        value=prefactor * S,
        slack=prefactor * (S_full - S),
        kmax=K,
        delta=delta,
        C0_bound=C0,
        C2_hat=series / delta ** 2,
        S=S,
    )
