"""
Common numeric helpers shared across the toolkit.
"""

import math
from typing import Iterable, Sequence

import numpy as np
from scipy.special import gammaln


def compensated_sum(values: Iterable[float]) -> float:
    """
    Exactly rounded floating point sum.

    Args:
        values: Iterable of floats (numpy arrays accepted)

    Returns:
        Sum correctly rounded to double precision
    """
    if isinstance(values, np.ndarray):
        values = values.ravel().tolist()
    return math.fsum(values)


def log_factorial(k: int) -> float:
    """log(k!), exact below 21 and via lgamma above."""
    k = int(k)
    if k < 0:
        raise ValueError(f"factorial of negative order {k}")
    if k <= 20:
        return math.log(math.factorial(k))
    return float(gammaln(k + 1.0))


def derive_seed(base: int, *indices: int) -> int:
    """
    Derive a 64-bit seed from a base seed and cell indices.

    The same (base, indices) always gives the same seed, independent of the
    order in which cells are scheduled.
    """
    ss = np.random.SeedSequence(entropy=int(base) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(int(i) for i in indices))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based Philox generator keyed by (seed, stream id)."""
    key = np.array([int(seed) & 0xFFFFFFFFFFFFFFFF, int(stream) & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def format_number(value: float) -> str:
    """Format a number with 17 significant digits so runs diff cleanly."""
    return f"{float(value):.17g}"


def format_vector(values: Sequence[float]) -> str:
    """Comma-joined 17-significant-digit rendering of a vector."""
    return ",".join(format_number(v) for v in values)


def sorted_unique_rows(points: np.ndarray, decimals: int = 12) -> np.ndarray:
    """Lexicographically sorted unique rows after rounding away float noise."""
    rounded = np.round(np.asarray(points, dtype=float), decimals)
    return np.unique(rounded, axis=0)
