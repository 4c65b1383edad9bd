"""
First-order Wasserstein distance between mixing distributions.
"""

import numpy as np
import ot

from ..mixing import DiscreteMixing
from ..utils.helpers import compensated_sum

SIMPLEX_MAX_ATOMS = 200


def _cdf_at(g: DiscreteMixing, t: np.ndarray) -> np.ndarray:
    """F_g(t) from sorted atoms and cumulative weights."""
    order = np.argsort(g.atoms[:, 0], kind="stable")
    cumulative = np.concatenate([[0.0], np.cumsum(g.weights[order])])
    return cumulative[np.searchsorted(g.atoms[order, 0], t, side="right")]


def _quantile_w1(g1: DiscreteMixing, g2: DiscreteMixing) -> float:
    """int |F1 - F2| over the merged sorted atoms (d = 1)."""
    points = np.unique(np.concatenate([g1.atoms[:, 0], g2.atoms[:, 0]]))
    if points.size < 2:
        return 0.0
    gaps = np.abs(_cdf_at(g1, points[:-1]) - _cdf_at(g2, points[:-1]))
    return compensated_sum(gaps * np.diff(points))


def _simplex_w1(g1: DiscreteMixing, g2: DiscreteMixing) -> float:
    cost = ot.dist(g1.atoms, g2.atoms, metric="euclidean")
    plan = ot.emd(g1.weights.copy(), g2.weights.copy(), cost, numItermax=1_000_000)
    return compensated_sum((plan * cost).ravel())


def wasserstein1(g1: DiscreteMixing, g2: DiscreteMixing, method: str = "auto") -> float:
    """
    W1(g1, g2) with Euclidean ground cost.

    Args:
        g1: First mixing distribution
        g2: Second mixing distribution
        method: "quantile" (d = 1, exact CDF coupling), "simplex" (exact
            network simplex on the atoms) or "auto" (quantile when d = 1)

    Returns:
        Nonnegative distance

    Raises:
        ValueError: dimension mismatch, unknown method, or more than 200
            atoms for the simplex in d > 1
    """
    if g1.d != g2.d:
        raise ValueError(f"dimension mismatch: {g1.d} vs {g2.d}")
    if method == "auto":
        method = "quantile" if g1.d == 1 else "simplex"

    if method == "quantile":
        if g1.d != 1:
            raise ValueError("quantile coupling needs d = 1")
        return _quantile_w1(g1, g2)
    if method == "simplex":
        if g1.d > 1 and max(g1.support_size, g2.support_size) > SIMPLEX_MAX_ATOMS:
            raise ValueError(
                f"network simplex limited to {SIMPLEX_MAX_ATOMS} atoms in d > 1, "
                f"got {g1.support_size} and {g2.support_size}"
            )
        return max(_simplex_w1(g1, g2), 0.0)
    raise ValueError(f"unknown W1 method '{method}'")
