"""
Kernel specification and multi-indices.

A kernel is the product Gaussian/Poisson component family on a bounded box:
the first ``b`` coordinates are unit-variance Gaussian location families, the
remaining ``d - b`` are Poisson rate families.
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, Iterator, Sequence, Tuple, Union

import numpy as np

from ..utils.helpers import log_factorial

SCHEMA_VERSION = 1

Observation = Union[float, int, Sequence[float], np.ndarray]


@dataclass(frozen=True)
class KernelSpec:
    """Product Gaussian/Poisson kernel on the box [theta_lo, theta_hi]."""
    d: int
    b: int
    theta_lo: Tuple[float, ...]
    theta_hi: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "theta_lo", tuple(float(v) for v in np.atleast_1d(self.theta_lo)))
        object.__setattr__(self, "theta_hi", tuple(float(v) for v in np.atleast_1d(self.theta_hi)))

        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"d must be a positive integer, got {self.d}")
        if int(self.b) != self.b or not (0 <= self.b <= self.d):
            raise ValueError(f"b must be an integer in [0, {self.d}], got {self.b}")
        if len(self.theta_lo) != self.d or len(self.theta_hi) != self.d:
            raise ValueError(f"box bounds must have length d={self.d}")
        for l, (lo, hi) in enumerate(zip(self.theta_lo, self.theta_hi)):
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ValueError(f"box bounds must be finite (coordinate {l})")
            if not lo < hi:
                raise ValueError(f"theta_lo[{l}]={lo} must be below theta_hi[{l}]={hi}")
            if l >= self.b and lo <= 0:
                raise ValueError(f"Poisson coordinate {l} needs theta_lo > 0, got {lo}")

    @classmethod
    def gaussian(cls, lo: float = -1.0, hi: float = 1.0) -> "KernelSpec":
        """One-dimensional Gaussian location kernel."""
        return cls(d=1, b=1, theta_lo=(lo,), theta_hi=(hi,))

    @classmethod
    def poisson(cls, lo: float, hi: float) -> "KernelSpec":
        """One-dimensional Poisson rate kernel."""
        return cls(d=1, b=0, theta_lo=(lo,), theta_hi=(hi,))

    @property
    def lo(self) -> np.ndarray:
        return np.array(self.theta_lo)

    @property
    def hi(self) -> np.ndarray:
        return np.array(self.theta_hi)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def is_gaussian(self, coord: int) -> bool:
        return coord < self.b

    @property
    def poisson_coords(self) -> Tuple[int, ...]:
        return tuple(range(self.b, self.d))

    def with_box(self, lo: Sequence[float], hi: Sequence[float]) -> "KernelSpec":
        """Same component family on a different box."""
        return KernelSpec(d=self.d, b=self.b, theta_lo=tuple(lo), theta_hi=tuple(hi))

    def contains(self, theta: Observation, tol: float = 1e-12) -> bool:
        t = np.atleast_1d(np.asarray(theta, dtype=float))
        if t.shape != (self.d,):
            return False
        slack = tol * max(1.0, self.diameter)
        return bool(np.all(t >= self.lo - slack) and np.all(t <= self.hi + slack))

    def check_theta(self, theta: Observation) -> np.ndarray:
        """Return theta as a d-vector, raising ValueError if it leaves the box."""
        t = np.atleast_1d(np.asarray(theta, dtype=float))
        if t.shape != (self.d,):
            raise ValueError(f"theta must have {self.d} coordinates, got shape {t.shape}")
        if not self.contains(t):
            raise ValueError(f"theta {t.tolist()} is outside the box [{list(self.theta_lo)}, {list(self.theta_hi)}]")
        return t

    def check_observations(self, x: Observation) -> np.ndarray:
        """
        Coerce observations to an (n, d) float array and validate them.

        A scalar or a d-vector is treated as a single observation.
        """
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1) if arr.shape[0] == self.d else arr.reshape(-1, 1)
        if arr.ndim != 2 or arr.shape[1] != self.d:
            raise ValueError(f"observations must have {self.d} columns, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("observations must be finite")
        if self.b < self.d:
            counts = arr[:, self.b:]
            bad = (counts < 0) | (counts != np.floor(counts))
            if np.any(bad):
                row = int(np.argwhere(bad)[0][0])
                raise ValueError(f"Poisson coordinates must be nonnegative integers (row {row}: {arr[row].tolist()})")
        return arr

    def radius(self, theta0: Observation) -> float:
        """M = sup over the box of the distance to theta0."""
        t0 = np.atleast_1d(np.asarray(theta0, dtype=float))
        far = np.maximum(np.abs(self.lo - t0), np.abs(self.hi - t0))
        return float(np.linalg.norm(far))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "v": SCHEMA_VERSION,
            "d": self.d,
            "b": self.b,
            "theta_lo": list(self.theta_lo),
            "theta_hi": list(self.theta_hi),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "KernelSpec":
        version = data.get("v", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported kernel schema version {version}")
        try:
            return cls(d=int(data["d"]), b=int(data["b"]), theta_lo=tuple(data["theta_lo"]), theta_hi=tuple(data["theta_hi"]))
        except KeyError as e:
            raise ValueError(f"kernel JSON missing field {e}") from e


@dataclass(frozen=True)
class MultiIndex:
    """A d-vector of nonnegative integers."""
    alpha: Tuple[int, ...]

    def __post_init__(self):
        alpha = tuple(int(a) for a in np.atleast_1d(self.alpha))
        if any(a < 0 for a in alpha):
            raise ValueError(f"multi-index entries must be nonnegative, got {alpha}")
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def of(cls, alpha: Union[int, Sequence[int], "MultiIndex"], d: int = 1) -> "MultiIndex":
        if isinstance(alpha, MultiIndex):
            return alpha
        if np.ndim(alpha) == 0:
            if d != 1:
                raise ValueError(f"scalar multi-index given for d={d}")
            return cls((int(alpha),))
        return cls(tuple(alpha))

    @property
    def d(self) -> int:
        return len(self.alpha)

    @property
    def order(self) -> int:
        return sum(self.alpha)

    @property
    def log_factorial(self) -> float:
        return sum(log_factorial(a) for a in self.alpha)

    @property
    def factorial(self) -> float:
        """alpha! as a float (inf once it leaves double range)."""
        lf = self.log_factorial
        return math.exp(lf) if lf < 709.0 else math.inf

    def __str__(self) -> str:
        return "(" + ",".join(str(a) for a in self.alpha) + ")"


def multi_indices(d: int, k: int) -> Iterator[Tuple[int, ...]]:
    """All alpha in N^d with |alpha| = k, first coordinate descending."""
    if d == 1:
        yield (k,)
        return
    for first in range(k, -1, -1):
        for rest in multi_indices(d - 1, k - first):
            yield (first,) + rest
