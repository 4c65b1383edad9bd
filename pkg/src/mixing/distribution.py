"""
Mixing distributions.

DiscreteMixing is the atomic representation used for g0, the NPMLE and the
submodel fits. UniformBox is the only continuous law, used as a sampler, as a
Gram–Schmidt integrand and (after discretization) as a likelihood reference.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from ..config import settings
from ..kernel import KernelSpec
from ..kernel.spec import SCHEMA_VERSION

LOG = logging.getLogger(__name__)


def _merge_atoms(atoms: np.ndarray, weights: np.ndarray, tol: float) -> Tuple[np.ndarray, np.ndarray]:
    """Greedy merge of atoms closer than tol; weights add, locations average."""
    order = np.lexsort(atoms.T[::-1])
    atoms, weights = atoms[order], weights[order]
    merged_atoms, merged_weights = [], []
    for theta, w in zip(atoms, weights):
        for i, rep in enumerate(merged_atoms):
            if np.linalg.norm(rep - theta) <= tol:
                total = merged_weights[i] + w
                if total > 0:
                    merged_atoms[i] = (merged_weights[i] * rep + w * theta) / total
                merged_weights[i] = total
                break
        else:
            merged_atoms.append(theta.astype(float).copy())
            merged_weights.append(float(w))
    return np.array(merged_atoms), np.array(merged_weights)


@dataclass(frozen=True, eq=False)
class DiscreteMixing:
    """Finitely supported probability measure sum_j w_j delta_{theta_j}."""
    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms.reshape(-1, 1)
        weights = np.array(self.weights, dtype=float).ravel()
        if atoms.ndim != 2 or atoms.shape[0] != weights.shape[0] or atoms.shape[0] == 0:
            raise ValueError(f"atoms {atoms.shape} and weights {weights.shape} do not describe a mixing distribution")
        if not (np.all(np.isfinite(atoms)) and np.all(np.isfinite(weights))):
            raise ValueError("atoms and weights must be finite")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {weights.sum():.17g}")
        atoms.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def create(
        cls,
        atoms: Sequence,
        weights: Sequence[float],
        kernel: Optional[KernelSpec] = None,
        merge_tol: Optional[float] = None
    ) -> "DiscreteMixing":
        """
        Build a mixing distribution, normalizing weights and merging near-duplicates.

        Args:
            atoms: J atoms (a flat list is read as d = 1)
            weights: J nonnegative weights (rescaled to sum to 1)
            kernel: If given, atoms are checked against its box
            merge_tol: Merge radius; defaults to 1e-6 times the box diameter

        Returns:
            Normalized DiscreteMixing with zero-weight atoms dropped
        """
        atoms = np.array(atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms.reshape(-1, 1)
        weights = np.array(weights, dtype=float).ravel()
        if atoms.shape[0] != weights.shape[0]:
            raise ValueError(f"{atoms.shape[0]} atoms but {weights.shape[0]} weights")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite and nonnegative")
        if weights.sum() <= 0:
            raise ValueError("weights must have positive total mass")

        if kernel is not None:
            if atoms.shape[1] != kernel.d:
                raise ValueError(f"atoms have {atoms.shape[1]} coordinates, kernel has d={kernel.d}")
            for theta in atoms:
                kernel.check_theta(theta)
            atoms = np.clip(atoms, kernel.lo, kernel.hi)

        if merge_tol is None:
            if kernel is not None:
                scale = kernel.diameter
            else:
                scale = max(1.0, float(np.linalg.norm(atoms.max(axis=0) - atoms.min(axis=0))))
            merge_tol = settings.merge_rel_tol * scale

        keep = weights > 0
        atoms, weights = _merge_atoms(atoms[keep], weights[keep], merge_tol)
        weights = weights / weights.sum()
        # one more pass so the sum is 1 to the last ulp
        weights = weights / weights.sum()
        return cls(atoms=atoms, weights=weights)

    @classmethod
    def point_mass(cls, theta) -> "DiscreteMixing":
        return cls(atoms=np.atleast_2d(np.asarray(theta, dtype=float)), weights=np.array([1.0]))

    @property
    def d(self) -> int:
        return self.atoms.shape[1]

    @property
    def support_size(self) -> int:
        return self.atoms.shape[0]

    def mean(self) -> np.ndarray:
        return self.weights @ self.atoms

    def highest_weight_atom(self) -> np.ndarray:
        """Anchor theta0: largest weight, ties broken by the lexicographically smallest atom."""
        top = self.weights.max()
        candidates = self.atoms[self.weights >= top - 1e-15]
        order = np.lexsort(candidates.T[::-1])
        return candidates[order[0]].copy()

    def weight_of(self, theta, tol: float = 1e-9) -> float:
        """Weight of the atom at theta (0.0 if theta is not an atom)."""
        t = np.atleast_1d(np.asarray(theta, dtype=float))
        dist = np.linalg.norm(self.atoms - t, axis=1)
        hits = dist <= tol * max(1.0, float(np.linalg.norm(t)))
        return float(self.weights[hits].sum())

    def to_dict(self, kernel: Optional[KernelSpec] = None) -> Dict[str, Any]:
        out = {
            "v": SCHEMA_VERSION,
            "atoms": self.atoms.tolist(),
            "weights": self.weights.tolist(),
        }
        if kernel is not None:
            out["kernel"] = kernel.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: Dict[str, Any], kernel: Optional[KernelSpec] = None) -> "DiscreteMixing":
        version = data.get("v", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported mixing schema version {version}")
        if "atoms" not in data or "weights" not in data:
            raise ValueError("mixing JSON needs 'atoms' and 'weights'")
        return cls.create(data["atoms"], data["weights"], kernel=kernel)

    def __repr__(self) -> str:
        return f"DiscreteMixing(J={self.support_size}, d={self.d})"


@dataclass(frozen=True)
class UniformBox:
    """Uniform law on a box, the continuous g0 used for submodel studies."""
    lo: Tuple[float, ...]
    hi: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(v) for v in np.atleast_1d(self.lo)))
        object.__setattr__(self, "hi", tuple(float(v) for v in np.atleast_1d(self.hi)))
        if len(self.lo) != len(self.hi) or any(a >= b for a, b in zip(self.lo, self.hi)):
            raise ValueError(f"invalid uniform box [{self.lo}, {self.hi}]")

    @classmethod
    def from_kernel(cls, kernel: KernelSpec) -> "UniformBox":
        return cls(lo=kernel.theta_lo, hi=kernel.theta_hi)

    @property
    def d(self) -> int:
        return len(self.lo)

    def mean(self) -> np.ndarray:
        return 0.5 * (np.array(self.lo) + np.array(self.hi))

    def discretize(self, n_atoms: int = None) -> DiscreteMixing:
        """
        Equal-weight quantile atoms (cell midpoints).

        In d > 1 the atoms form a product grid with round(n_atoms^(1/d))
        points per coordinate.
        """
        n_atoms = n_atoms or settings.uniform_atoms
        per_dim = max(1, int(round(n_atoms ** (1.0 / self.d))))
        axes = [
            lo + (np.arange(per_dim) + 0.5) * (hi - lo) / per_dim
            for lo, hi in zip(self.lo, self.hi)
        ]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.d)
        weights = np.full(grid.shape[0], 1.0 / grid.shape[0])
        return DiscreteMixing(atoms=grid, weights=weights / weights.sum())

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(np.array(self.lo), np.array(self.hi), size=(n, self.d))

    def coordinate_quadrature(self, coord: int, nodes: int = 256) -> Tuple[np.ndarray, np.ndarray]:
        """Gauss–Legendre nodes and probability weights for one coordinate marginal."""
        x, w = np.polynomial.legendre.leggauss(nodes)
        lo, hi = self.lo[coord], self.hi[coord]
        return 0.5 * (lo + hi) + 0.5 * (hi - lo) * x, w / 2.0

    def to_dict(self) -> Dict[str, Any]:
        return {"v": SCHEMA_VERSION, "uniform": {"lo": list(self.lo), "hi": list(self.hi)}}


MixingDescriptor = Union[DiscreteMixing, UniformBox]


def mixing_from_dict(data: Dict[str, Any], kernel: Optional[KernelSpec] = None) -> MixingDescriptor:
    """Read either mixing JSON form."""
    if "uniform" in data:
        box = data["uniform"]
        if box == "box" or box is True:
            if kernel is None:
                raise ValueError("uniform-on-box g0 needs a kernel")
            return UniformBox.from_kernel(kernel)
        return UniformBox(lo=tuple(box["lo"]), hi=tuple(box["hi"]))
    return DiscreteMixing.from_dict(data, kernel=kernel)


def as_discrete(g: MixingDescriptor, n_atoms: int = None) -> DiscreteMixing:
    """Discrete representation of a descriptor (uniform laws are discretized)."""
    if isinstance(g, DiscreteMixing):
        return g
    discrete = g.discretize(n_atoms)
    LOG.debug(f"Discretized uniform g0 on {discrete.support_size} atoms")
    return discrete
