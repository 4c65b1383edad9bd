"""
NPMLE solver over the bounded box.

Vertex exchange on a probe grid: each sweep adds the probe with the largest
directional derivative, exchanges mass across the support with a constrained
Newton step, polishes with EM sweeps and prunes negligible weights. The grid
is refined around the support between levels and the fit is certified when
the largest directional derivative over the final probe set is at most
n * tol_gap.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar, nnls

from ..config import settings
from ..data.dataset import Dataset
from ..density.marginal import log_likelihood, log_mixture_densities
from ..kernel import KernelSpec, log_component_matrix
from ..mixing import DiscreteMixing
from ..utils.errors import NumericalError
from ..utils.helpers import compensated_sum, make_rng, sorted_unique_rows

LOG = logging.getLogger(__name__)

# cache the full (n, probes) matrix below this many entries, else work in chunks
CACHE_ENTRIES = 20_000_000
CHUNK_COLUMNS = 2048
MONOTONE_RTOL = 1e-10
ARMIJO = 1.0 / 3.0
PROBE_STREAM = 7


@dataclass(frozen=True)
class SolverConfig:
    """Solver knobs; defaults come from settings."""
    grid_per_dim: int = field(default_factory=lambda: settings.grid_per_dim)
    tol_gap: float = field(default_factory=lambda: settings.tol_gap)
    max_sweeps: int = field(default_factory=lambda: settings.max_sweeps)
    em_inner: int = field(default_factory=lambda: settings.em_inner)
    refine_levels: int = field(default_factory=lambda: settings.refine_levels)
    random_probes: int = field(default_factory=lambda: settings.random_probes)

    def __post_init__(self):
        if self.grid_per_dim < 32:
            raise ValueError(f"grid_per_dim must be at least 32, got {self.grid_per_dim}")
        if not (0 < self.tol_gap <= 1e-4):
            raise ValueError(f"tol_gap must be in (0, 1e-4], got {self.tol_gap}")
        if self.refine_levels < 1:
            raise ValueError(f"refine_levels must be at least 1, got {self.refine_levels}")
        if self.max_sweeps < 1 or self.em_inner < 0 or self.random_probes < 0:
            raise ValueError("max_sweeps must be positive; em_inner and random_probes nonnegative")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class Certificate:
    """Approximate-optimality certificate of a fitted mixing distribution."""
    loglik: float
    gap: float
    sweeps: int
    support_size: int
    certified: bool
    level: int
    seed: int
    tol_gap: float
    n: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Certificate":
        try:
            return cls(**{k: data[k] for k in cls.__dataclass_fields__})
        except KeyError as e:
            raise ValueError(f"certificate JSON missing field {e}") from e


def default_probe_grid(kernel: KernelSpec, per_dim: int) -> np.ndarray:
    """Product grid of per_dim equispaced points per coordinate over the box, lexicographic."""
    if per_dim < 1:
        raise ValueError(f"per_dim must be positive, got {per_dim}")
    axes = [np.linspace(lo, hi, per_dim) for lo, hi in zip(kernel.theta_lo, kernel.theta_hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def directional_derivatives(g: DiscreteMixing, data: Dataset, kernel: KernelSpec, probe: np.ndarray) -> np.ndarray:
    """
    D(theta) = sum_i p_theta(X_i) / f_g(X_i) - n at each probe row.

    The derivative of l_n((1 - eps) g + eps delta_theta) at eps = 0.
    """
    data.check_kernel(kernel)
    probe = np.asarray(probe, dtype=float).reshape(-1, kernel.d)
    logf = log_mixture_densities(g, kernel, data.values)
    out = np.empty(probe.shape[0])
    for start in range(0, probe.shape[0], CHUNK_COLUMNS):
        block = log_component_matrix(kernel, probe[start:start + CHUNK_COLUMNS], data.values)
        out[start:start + CHUNK_COLUMNS] = np.exp(block - logf[:, None]).sum(axis=0)
    return out - data.n


def optimality_gap(g: DiscreteMixing, data: Dataset, kernel: KernelSpec, probe_grid: Optional[np.ndarray] = None) -> float:
    """
    Largest directional derivative over a probe grid.

    Args:
        g: Candidate mixing distribution
        data: Observations
        kernel: Kernel specification
        probe_grid: (m, d) probe points; defaults to the settings grid plus supp(g)

    Returns:
        max_theta sum_i p_theta(X_i) / f_g(X_i) - n
    """
    if probe_grid is None:
        probe_grid = np.vstack([default_probe_grid(kernel, settings.grid_per_dim), g.atoms])
    return float(directional_derivatives(g, data, kernel, probe_grid).max())


class _ScaledLikelihood:
    """exp(log p_theta(X_i) - shift_i) over a probe set, shift_i the row max."""

    def __init__(self, kernel: KernelSpec, X: np.ndarray, probes: np.ndarray):
        self.kernel = kernel
        self.X = X
        self.probes = probes
        n, m = X.shape[0], probes.shape[0]
        self.matrix = None
        if n * m <= CACHE_ENTRIES:
            logp = log_component_matrix(kernel, probes, X)
            self.row_argmax = logp.argmax(axis=1)
            self.shift = logp[np.arange(n), self.row_argmax]
            self.matrix = np.exp(logp - self.shift[:, None])
            self.log_column_sums = (logp - self.shift[:, None]).sum(axis=0)
        else:
            self.shift = np.full(n, -np.inf)
            self.row_argmax = np.zeros(n, dtype=int)
            sums = []
            for start, block in self._log_blocks():
                better = block.max(axis=1) > self.shift
                self.row_argmax[better] = start + block.argmax(axis=1)[better]
                self.shift = np.maximum(self.shift, block.max(axis=1))
                sums.append(block.sum(axis=0))
            self.log_column_sums = np.concatenate(sums) - self.shift.sum()

    @property
    def size(self) -> int:
        return self.probes.shape[0]

    def _log_blocks(self):
        for start in range(0, self.size, CHUNK_COLUMNS):
            yield start, log_component_matrix(self.kernel, self.probes[start:start + CHUNK_COLUMNS], self.X)

    def atoms(self, atoms: np.ndarray) -> np.ndarray:
        """Scaled likelihood columns for arbitrary atoms, (n, m)."""
        return np.exp(log_component_matrix(self.kernel, atoms, self.X) - self.shift[:, None])

    def column(self, j: int) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix[:, j]
        return self.atoms(self.probes[j:j + 1])[:, 0]

    def derivatives(self, inv_f: np.ndarray) -> np.ndarray:
        n = self.X.shape[0]
        if self.matrix is not None:
            return self.matrix.T @ inv_f - n
        parts = [np.exp(block - self.shift[:, None]).T @ inv_f for _, block in self._log_blocks()]
        return np.concatenate(parts) - n


class VertexExchangeSolver:
    """
    Coarse-to-fine vertex exchange with constrained-Newton mass exchange and EM polishing.
    """

    def __init__(self, kernel: KernelSpec, cfg: Optional[SolverConfig] = None):
        self.kernel = kernel
        self.cfg = cfg or SolverConfig()
        self._lik: Optional[_ScaledLikelihood] = None
        self._atoms = np.empty((0, kernel.d))
        self._weights = np.empty(0)
        self._cols = np.empty((0, 0))

    # -- state helpers -------------------------------------------------

    def _density(self, weights: Optional[np.ndarray] = None, cols: Optional[np.ndarray] = None) -> np.ndarray:
        w = self._weights if weights is None else weights
        c = self._cols if cols is None else cols
        return c @ w

    def _objective(self, f: np.ndarray) -> float:
        """sum_i log f_i in the scaled domain (-inf if any f_i vanishes)."""
        if np.any(f <= 0.0):
            return -math.inf
        return compensated_sum(np.log(f))

    def _set_support(self, atoms: np.ndarray, weights: np.ndarray) -> None:
        self._atoms = atoms
        self._weights = weights
        self._cols = self._lik.atoms(atoms)

    def _start(self) -> None:
        """Best single probe, plus the row-argmax probe of any row it cannot explain."""
        lik = self._lik
        j0 = int(np.argmax(lik.log_column_sums))
        col = lik.column(j0)
        idx = [j0]
        orphaned = np.unique(lik.row_argmax[col <= 1e-300])
        idx.extend(int(j) for j in orphaned if j != j0)
        weights = np.full(len(idx), 1.0 / len(idx))
        self._set_support(lik.probes[idx], weights)
        LOG.debug(f"Starting support: {len(idx)} atoms")

    # -- steps ---------------------------------------------------------

    def _vertex_step(self, j: int, current: float) -> float:
        """Line search along (1 - lam) g + lam delta_probe_j; returns the new objective."""
        new_col = self._lik.column(j)
        f = self._density()

        def neg(lam):
            return -self._objective((1.0 - lam) * f + lam * new_col)

        res = minimize_scalar(neg, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-12})
        lam, value = float(res.x), -float(res.fun)
        if not value > current:
            return current

        probe = self._lik.probes[j]
        hit = np.flatnonzero(np.all(self._atoms == probe, axis=1))
        weights = (1.0 - lam) * self._weights
        if hit.size:
            weights[hit[0]] += lam
            self._weights = weights
        else:
            self._atoms = np.vstack([self._atoms, probe])
            self._weights = np.append(weights, lam)
            self._cols = np.column_stack([self._cols, new_col])
        return value

    def _mass_exchange(self, current: float) -> float:
        """Constrained Newton step on the support weights with Armijo backtracking."""
        f = self._density()
        S = self._cols / f[:, None]
        try:
            target, _ = nnls(S, np.full(S.shape[0], 2.0))
        except RuntimeError as e:
            LOG.debug(f"NNLS mass exchange skipped: {e}")
            return current
        if target.sum() <= 0.0:
            return current
        target = target / target.sum()
        direction = target - self._weights
        slope = float(S.sum(axis=0) @ direction)
        if slope <= 0.0:
            return current
        step = 1.0
        for _ in range(40):
            trial = self._weights + step * direction
            value = self._objective(self._density(trial))
            if value >= current + ARMIJO * step * slope:
                self._weights = trial
                return value
            step *= 0.5
        return current

    def _em(self, sweeps: int, current: float) -> float:
        for _ in range(sweeps):
            f = self._density()
            self._weights = self._weights * (self._cols / f[:, None]).mean(axis=0)
            self._weights = self._weights / self._weights.sum()
            current = self._objective(self._density())
        return current

    def _prune(self, current: float) -> float:
        keep = self._weights >= settings.prune_weight
        if keep.all() or not keep.any():
            return current
        weights = self._weights[keep] / self._weights[keep].sum()
        value = self._objective(self._density(weights, self._cols[:, keep]))
        if value < current - MONOTONE_RTOL * (1.0 + abs(current)):
            return current
        self._atoms, self._weights, self._cols = self._atoms[keep], weights, self._cols[:, keep]
        return value

    # -- probes --------------------------------------------------------

    def _base_probes(self, seed: int, grid: Optional[np.ndarray]) -> np.ndarray:
        if grid is not None:
            probes = np.asarray(grid, dtype=float).reshape(-1, self.kernel.d)
            for theta in probes:
                self.kernel.check_theta(theta)
            return sorted_unique_rows(np.clip(probes, self.kernel.lo, self.kernel.hi))
        probes = default_probe_grid(self.kernel, self.cfg.grid_per_dim)
        if self.cfg.random_probes:
            rng = make_rng(seed, stream=PROBE_STREAM)
            extra = rng.uniform(self.kernel.lo, self.kernel.hi, size=(self.cfg.random_probes, self.kernel.d))
            probes = np.vstack([probes, extra])
        return sorted_unique_rows(probes)

    def _refined_probes(self, base: np.ndarray, level: int) -> np.ndarray:
        """Base probes plus a (5^d)-point stencil around every support atom at spacing h / 2^level."""
        h = (self.kernel.hi - self.kernel.lo) / (self.cfg.grid_per_dim - 1) / (2 ** level)
        offsets = np.stack(np.meshgrid(*[np.arange(-2, 3)] * self.kernel.d, indexing="ij"), axis=-1).reshape(-1, self.kernel.d)
        local = (self._atoms[:, None, :] + offsets[None, :, :] * h).reshape(-1, self.kernel.d)
        local = np.clip(local, self.kernel.lo, self.kernel.hi)
        return sorted_unique_rows(np.vstack([base, local, self._atoms]))

    # -- main loop -----------------------------------------------------

    def run(self, data: Dataset, seed: int = 0, grid: Optional[np.ndarray] = None) -> Tuple[DiscreteMixing, Certificate]:
        """
        Fit the NPMLE.

        Args:
            data: Observations inside the kernel's sample space
            seed: Seed of the random probes (the fit is deterministic given it)
            grid: Explicit starting probe grid (replaces the default grid and random probes)

        Returns:
            (g_hat, certificate); certificate.certified is False when the
            sweep budget ran out with the gap above tolerance
        """
        kernel, cfg = self.kernel, self.cfg
        data.check_kernel(kernel)
        if data.n == 0:
            raise ValueError("cannot fit an empty dataset")
        n = data.n
        X = data.values
        threshold = n * cfg.tol_gap

        LOG.info("=" * 80)
        LOG.info("NPMLE FIT STARTED")
        LOG.info("=" * 80)
        LOG.info(f"Observations: {n}  d={kernel.d}  b={kernel.b}")
        LOG.info(f"Box: {list(kernel.theta_lo)} to {list(kernel.theta_hi)}")
        LOG.info(f"Grid per dim: {cfg.grid_per_dim}  Levels: {cfg.refine_levels}  tol_gap: {cfg.tol_gap:g}")
        LOG.info("=" * 80)

        base = self._base_probes(seed, grid)
        sweeps = 0
        gap = math.inf
        level = 0
        levels = cfg.refine_levels if grid is None else 1
        for level in range(levels):
            probes = base if level == 0 else self._refined_probes(base, level)
            self._lik = _ScaledLikelihood(kernel, X, probes)
            if level == 0:
                self._start()
            else:
                self._set_support(self._atoms, self._weights)
            current = self._objective(self._density())
            LOG.info(f"🔍 Level {level}: {probes.shape[0]} probes, support {self._atoms.shape[0]}")

            while sweeps < cfg.max_sweeps:
                derivs = self._lik.derivatives(1.0 / self._density())
                j = int(np.argmax(derivs))
                gap = float(derivs[j])
                if gap <= threshold:
                    break
                sweeps += 1
                previous = current
                current = self._vertex_step(j, current)
                current = self._mass_exchange(current)
                current = self._em(cfg.em_inner, current)
                current = self._prune(current)
                if current < previous - MONOTONE_RTOL * (1.0 + abs(previous)):
                    raise NumericalError(f"log-likelihood decreased in sweep {sweeps}: {previous:.17g} -> {current:.17g}")
                LOG.debug(f"   sweep {sweeps}: gap={gap:.3e} support={self._atoms.shape[0]} scaled loglik={current:.17g}")

            if sweeps >= cfg.max_sweeps:
                derivs = self._lik.derivatives(1.0 / self._density())
                gap = float(derivs.max())
                break

        g_hat = DiscreteMixing.create(self._atoms, self._weights, kernel=kernel)
        certified = gap <= threshold
        certificate = Certificate(
            loglik=log_likelihood(g_hat, kernel, data),
            gap=gap,
            sweeps=sweeps,
            support_size=g_hat.support_size,
            certified=certified,
            level=level,
            seed=int(seed),
            tol_gap=cfg.tol_gap,
            n=n,
        )

        LOG.info("-" * 80)
        if certified:
            LOG.info(f"✅ Certified: gap={gap:.3e} <= {threshold:.3e} after {sweeps} sweeps, support {g_hat.support_size}")
        else:
            LOG.warning(f"⚠️  Not certified: gap={gap:.3e} > {threshold:.3e} after {sweeps} sweeps")
        LOG.info(f"   log-likelihood: {certificate.loglik:.17g}")
        LOG.info("=" * 80)
        return g_hat, certificate


def solve(
    data: Dataset,
    kernel: KernelSpec,
    cfg: Optional[SolverConfig] = None,
    seed: int = 0,
    grid: Optional[np.ndarray] = None
) -> Tuple[DiscreteMixing, Certificate]:
    """
    Convenience function to fit the NPMLE.

    Args:
        data: Observations
        kernel: Kernel specification
        cfg: Solver configuration (defaults from settings)
        seed: 64-bit seed
        grid: Optional explicit probe grid

    Returns:
        (g_hat, Certificate)
    """
    return VertexExchangeSolver(kernel, cfg).run(data, seed=seed, grid=grid)
