"""
Centered moments of mixing distributions and symmetric-tensor norms.

m_{alpha,g} = sum_j w_j (theta_j - theta0)^alpha. The order-k moment tensor
has entry m_alpha at every index tuple whose counts are alpha. Its spectral
norm is the sup over unit c of |<T, c^{(x)k}>| (Banach), computed by
multi-start projected gradient ascent on the sphere.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..config import settings
from ..kernel import MultiIndex, multi_indices
from ..utils.errors import OrderCapExceeded
from ..utils.helpers import compensated_sum, make_rng
from .distribution import DiscreteMixing

LOG = logging.getLogger(__name__)

ValueGrad = Callable[[np.ndarray], Tuple[float, np.ndarray]]


def _centered(g: DiscreteMixing, theta0) -> np.ndarray:
    t0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    if t0.shape != (g.d,):
        raise ValueError(f"theta0 must have {g.d} coordinates")
    return g.atoms - t0


def moment(g: DiscreteMixing, theta0, alpha, cap: Optional[int] = None) -> float:
    """
    Scalar moment m_{alpha,g} with compensated summation.

    Args:
        g: Mixing distribution
        theta0: Anchor point
        alpha: Multi-index (int accepted when d = 1)
        cap: Order cap (defaults to the polynomial order cap)

    Returns:
        sum_j w_j prod_l (theta_jl - theta0_l)^alpha_l
    """
    a = MultiIndex.of(alpha, g.d)
    cap = settings.poly_order_cap if cap is None else cap
    if a.order > cap:
        raise OrderCapExceeded(f"moment order {a.order} exceeds cap {cap}")
    u = _centered(g, theta0)
    powers = np.prod(u ** np.array(a.alpha), axis=1)
    return compensated_sum(g.weights * powers)


@dataclass(frozen=True)
class MomentTable:
    """All moments of order <= cap about theta0."""
    theta0: Tuple[float, ...]
    cap: int
    entries: Dict[Tuple[int, ...], float]

    def __getitem__(self, alpha) -> float:
        return self.entries[MultiIndex.of(alpha, len(self.theta0)).alpha]

    @property
    def d(self) -> int:
        return len(self.theta0)

    def of_order(self, k: int) -> Dict[Tuple[int, ...], float]:
        return {a: v for a, v in self.entries.items() if sum(a) == k}

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {"alpha": str(MultiIndex(a)), "order": sum(a), "value": v}
            for a, v in self.entries.items()
        ]
        return pd.DataFrame(rows, columns=["alpha", "order", "value"])

    def to_csv(self, path: Union[str, Path]) -> None:
        self.to_frame()[["alpha", "value"]].to_csv(path, index=False, float_format="%.17g")


def moment_table(g: DiscreteMixing, theta0, cap: int) -> MomentTable:
    """Moments m_alpha for every |alpha| <= cap."""
    entries = {}
    for k in range(cap + 1):
        for alpha in multi_indices(g.d, k):
            entries[alpha] = moment(g, theta0, alpha, cap=cap)
    t0 = tuple(float(v) for v in np.atleast_1d(theta0))
    return MomentTable(theta0=t0, cap=cap, entries=entries)


def _sphere_starts(d: int, n_starts: int, rng: np.random.Generator) -> np.ndarray:
    """Axis, diagonal and random unit vectors."""
    fixed = [np.eye(d)[i] for i in range(d)]
    for signs in itertools.product((1.0, -1.0), repeat=d - 1):
        v = np.concatenate([[1.0], signs])
        fixed.append(v / np.linalg.norm(v))
    fixed = np.array(fixed)
    n_random = max(0, n_starts - fixed.shape[0])
    random = rng.standard_normal((n_random, d))
    random /= np.linalg.norm(random, axis=1, keepdims=True)
    return np.vstack([fixed, random])


def _ascend(value_grad: ValueGrad, c: np.ndarray, iters: int, tol: float) -> float:
    """Projected gradient ascent of |F| on the unit sphere from c."""
    value, grad = value_grad(c)
    sign = 1.0 if value >= 0 else -1.0
    best = sign * value
    step = 1.0
    for _ in range(iters):
        g = sign * grad
        tangent = g - (g @ c) * c
        norm_sq = float(tangent @ tangent)
        if norm_sq < 1e-30:
            break
        improved = False
        while step > 1e-16:
            trial = c + step * tangent
            trial /= np.linalg.norm(trial)
            t_value, t_grad = value_grad(trial)
            if sign * t_value >= best + 1e-4 * step * norm_sq:
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        gain = sign * t_value - best
        c, best, grad = trial, sign * t_value, t_grad
        step *= 2.0
        if gain <= tol * max(1.0, abs(best)):
            break
    return abs(best)


def _sphere_sup(value_grad: ValueGrad, d: int, seed: int = 0) -> float:
    if d == 1:
        return abs(value_grad(np.array([1.0]))[0])
    if d > 3:
        raise ValueError(f"spectral norm is only supported for d <= 3, got d={d}")
    rng = make_rng(seed, stream=d)
    starts = _sphere_starts(d, settings.spectral_starts, rng)
    return max(_ascend(value_grad, c, settings.spectral_iters, 1e-10) for c in starts)


def _contract(T: np.ndarray, c: np.ndarray, times: int) -> np.ndarray:
    out = T
    for _ in range(times):
        out = np.tensordot(out, c, axes=([out.ndim - 1], [0]))
    return out


def symmetric_spectral_norm(T: np.ndarray) -> float:
    """Spectral norm of a symmetric tensor of shape (d,)*k, d <= 3."""
    k = T.ndim
    if k == 0:
        return abs(float(T))
    d = T.shape[0]

    def value_grad(c):
        partial = _contract(T, c, k - 1)
        return float(partial @ c), k * partial

    return _sphere_sup(value_grad, d)


def tensor_norms(T: np.ndarray) -> Tuple[float, float, float]:
    """(max-entry, spectral, Frobenius) norms of a symmetric tensor."""
    T = np.asarray(T, dtype=float)
    return float(np.max(np.abs(T))), symmetric_spectral_norm(T), float(np.linalg.norm(T.ravel()))


@dataclass(frozen=True)
class MomentGap:
    """Spectral gaps ||m_{k,g} - m_{k,g0}||_2 for k = 1..kmax and their max over k <= 2J."""
    theta0: Tuple[float, ...]
    per_order: Tuple[float, ...]
    delta: float
    J: int

    def gap(self, k: int) -> float:
        return 0.0 if k == 0 else self.per_order[k - 1]


def moment_gap(g: DiscreteMixing, g0: DiscreteMixing, theta0, kmax: int) -> MomentGap:
    """
    Per-order spectral moment gaps and Delta_g = max_{k <= 2J} gap_k.

    Args:
        g: Mixing distribution
        g0: Reference mixing distribution (J = its support size)
        theta0: Anchor point
        kmax: Highest order, at least 2J

    Returns:
        MomentGap
    """
    if g.d != g0.d:
        raise ValueError("g and g0 have different dimensions")
    if g.d > 3:
        raise ValueError(f"moment gaps need d <= 3, got d={g.d}")
    J = g0.support_size
    if kmax < 2 * J:
        raise ValueError(f"kmax={kmax} must be at least 2J={2 * J}")

    u = np.vstack([_centered(g, theta0), _centered(g0, theta0)])
    v = np.concatenate([g.weights, -g0.weights])

    gaps = []
    for k in range(1, kmax + 1):
        if g.d == 1:
            gaps.append(abs(compensated_sum(v * u[:, 0] ** k)))
            continue

        def value_grad(c, k=k):
            proj = u @ c
            return float(np.sum(v * proj ** k)), k * ((v * proj ** (k - 1)) @ u)

        gaps.append(_sphere_sup(value_grad, g.d, seed=k))

    delta = max(gaps[: 2 * J]) if gaps else 0.0
    t0 = tuple(float(x) for x in np.atleast_1d(theta0))
    return MomentGap(theta0=t0, per_order=tuple(gaps), delta=delta, J=J)


def log_moment_comparison_factor(k: int, J: int, M: float) -> float:
    """log of k (M + 1)^(2Jk)."""
    return math.log(k) + 2.0 * J * k * math.log(M + 1.0)


def moment_comparison_bound(k: int, J: int, M: float, delta: float) -> float:
    """Growth bound k (M + 1)^(2Jk) Delta for the order-k gap when k > 2J."""
    if delta == 0.0:
        return 0.0
    log_bound = log_moment_comparison_factor(k, J, M) + math.log(delta)
    return math.exp(log_bound) if log_bound < 709.0 else math.inf
