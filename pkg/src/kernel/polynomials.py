"""
Orthogonal polynomial system of the kernel.

q_alpha(x) is the alpha-th derivative in theta of p_theta(x) / p_theta0(x) at
theta0. Per coordinate this is a Hermite polynomial in x - theta0 (Gaussian)
or a Charlier polynomial (Poisson). Values are produced by three-term
recurrences on the normalized sequence q_k / sqrt(a_k k!), which stays O(1)
in size, and rescaled in log-domain when raw values are requested.
"""

import math
from typing import List, Tuple

import numpy as np

from ..config import settings
from ..utils.errors import OrderCapExceeded
from .spec import KernelSpec, MultiIndex, Observation


def coordinate_scales(kernel: KernelSpec, theta0: Observation) -> np.ndarray:
    """V(theta0_l): 1 on Gaussian coordinates, theta0_l on Poisson coordinates."""
    t0 = kernel.check_theta(theta0)
    scales = np.ones(kernel.d)
    for l in kernel.poisson_coords:
        scales[l] = t0[l]
    return scales


def _check_cap(order: int, cap: int = None) -> None:
    cap = settings.poly_order_cap if cap is None else cap
    if order > cap:
        raise OrderCapExceeded(f"order {order} exceeds the polynomial order cap {cap}")


def log_poly_norm_const(kernel: KernelSpec, theta0: Observation, alpha) -> float:
    """log a_alpha = -sum_l alpha_l log V(theta0_l)."""
    a = MultiIndex.of(alpha, kernel.d)
    if a.d != kernel.d:
        raise ValueError(f"multi-index {a} has wrong dimension for d={kernel.d}")
    scales = coordinate_scales(kernel, theta0)
    return -float(np.dot(a.alpha, np.log(scales)))


def poly_norm_const(kernel: KernelSpec, theta0: Observation, alpha) -> float:
    """a_alpha = prod_l V(theta0_l)^(-alpha_l)."""
    return math.exp(log_poly_norm_const(kernel, theta0, alpha))


def normalized_recurrence(x: np.ndarray, theta0_l: float, kmax: int, gaussian: bool) -> np.ndarray:
    """
    Orthonormal values q_k(x) / sqrt(a_k k!) for k = 0..kmax on one coordinate.

    Args:
        x: 1-D array of coordinate values
        theta0_l: Anchor for this coordinate
        kmax: Highest order
        gaussian: Hermite (True) or Charlier (False) family

    Returns:
        (kmax + 1, len(x)) array
    """
    x = np.asarray(x, dtype=float)
    table = np.empty((kmax + 1, x.shape[0]))
    table[0] = 1.0
    if kmax == 0:
        return table

    if gaussian:
        t = x - theta0_l
        table[1] = t
        for k in range(1, kmax):
            table[k + 1] = (t * table[k] - math.sqrt(k) * table[k - 1]) / math.sqrt(k + 1)
    else:
        table[:] = _charlier(x, theta0_l, kmax)
    return table


def _charlier(x: np.ndarray, theta0_l: float, kmax: int) -> np.ndarray:
    """
    Normalized Charlier values for k = 0..kmax.

    At a fixed count x the sequence grows or oscillates up to the turning
    index (sqrt(x) + sqrt(theta0))^2 and decays past it, where it is the
    minimal solution of its recurrence. The forward recurrence runs up to the
    turning index; beyond it each value is carried on by the ratio
    n_k / n_{k-1}, which the backward recurrence gives accurately there.
    """
    turn = np.floor((np.sqrt(x) + math.sqrt(theta0_l)) ** 2)
    ratios = _charlier_ratios(x, theta0_l, kmax) if np.any(turn < kmax) else None

    table = np.empty((kmax + 1, x.shape[0]))
    table[0] = 1.0
    previous = np.zeros(x.shape[0])
    for k in range(kmax):
        forward = ((x - k - theta0_l) * table[k] - math.sqrt(k * theta0_l) * previous) / math.sqrt((k + 1) * theta0_l)
        if ratios is not None:
            forward = np.where(k + 1 > turn, table[k] * ratios[k], forward)
        previous = table[k]
        table[k + 1] = forward
    return table


def _charlier_ratios(x: np.ndarray, theta0_l: float, kmax: int) -> np.ndarray:
    """ratios[k] = n_{k+1}(x) / n_k(x) for k < kmax, valid past the turning index."""
    top = int(kmax + 2.0 * np.max(x, initial=0.0) + 4.0 * theta0_l + 60)
    ratios = np.empty((kmax, x.shape[0]))
    s = np.zeros(x.shape[0])
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        for k in range(top, 0, -1):
            a_k = (x - theta0_l - k) / math.sqrt(theta0_l * (k + 1))
            b_k = math.sqrt(k / (k + 1))
            # s holds n_{k+1} / n_k on entry and n_k / n_{k-1} on exit
            s = b_k / (a_k - s)
            if k <= kmax:
                ratios[k - 1] = s
    return ratios


def orthonormal_poly_table(kernel: KernelSpec, theta0: Observation, kmax: int, X: np.ndarray) -> List[np.ndarray]:
    """Per-coordinate orthonormal tables, element l has shape (kmax + 1, n)."""
    t0 = kernel.check_theta(theta0)
    X = np.asarray(X, dtype=float).reshape(-1, kernel.d)
    return [
        normalized_recurrence(X[:, l], t0[l], kmax, kernel.is_gaussian(l))
        for l in range(kernel.d)
    ]


def orth_poly_log_abs(kernel: KernelSpec, theta0: Observation, alpha, x: Observation) -> Tuple[float, float]:
    """
    Sign and log-magnitude of q_alpha(x).

    Returns:
        (sign, log|q_alpha(x)|); sign is 0.0 and the log is -inf at a root
    """
    a = MultiIndex.of(alpha, kernel.d)
    _check_cap(a.order)
    X = kernel.check_observations(x)
    if X.shape[0] != 1:
        raise ValueError(f"expected a single observation, got {X.shape[0]}")
    tables = orthonormal_poly_table(kernel, theta0, max(a.alpha), X)
    normalized = 1.0
    for l, k in enumerate(a.alpha):
        normalized *= tables[l][k, 0]
    if normalized == 0.0:
        return 0.0, -math.inf
    log_scale = 0.5 * (log_poly_norm_const(kernel, theta0, a) + a.log_factorial)
    return math.copysign(1.0, normalized), math.log(abs(normalized)) + log_scale


def orth_poly_eval(kernel: KernelSpec, theta0: Observation, alpha, x: Observation) -> float:
    """
    q_alpha(x) for one observation.

    Args:
        kernel: Kernel specification
        theta0: Anchor inside the box
        alpha: Multi-index (an int is accepted when d = 1)
        x: One observation

    Returns:
        Polynomial value; q_0 is identically 1
    """
    sign, log_abs = orth_poly_log_abs(kernel, theta0, alpha, x)
    if sign == 0.0:
        return 0.0
    if log_abs > 709.0:
        return sign * math.inf
    return sign * math.exp(log_abs)
