"""
Numerical realization of the reference measure mu.

Gaussian coordinates use composite Gauss–Legendre on [theta_lo - R,
theta_hi + R]; Poisson coordinates sum counts 0..X_max where a Chernoff tail
bound drops below tail_tol. Coordinates combine as a tensor product.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from ..config import settings
from ..kernel import KernelSpec
from ..mixing import DiscreteMixing
from ..utils.errors import QuadratureNonConvergence

LOG = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Nodes (N, d) and weights (N,) of one tensor-product rule."""
    points: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return self.points.shape[0]


def chernoff_cutoff(rate: float, tail_tol: float) -> int:
    """
    Smallest count x with P(Poisson(rate) >= x) bounded below tail_tol.

    Uses P(X >= x) <= exp(-rate) (e rate / x)^x for x > rate.
    """
    log_tol = math.log(tail_tol)
    x = max(1, int(math.ceil(rate)) + 1)
    while True:
        log_bound = -rate + x * (1.0 + math.log(rate) - math.log(x))
        if log_bound < log_tol:
            return x
        x += 1


def composite_gauss_legendre(lo: float, hi: float, nodes: int, panel: int) -> tuple:
    panels = max(1, int(math.ceil(nodes / panel)))
    x, w = np.polynomial.legendre.leggauss(panel)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    points = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return points, weights


@dataclass(frozen=True)
class QuadratureScheme:
    """Per-coordinate rules; node count and radius for Gaussian, tail tolerance for Poisson."""
    nodes_per_dim: int = settings.quad_nodes
    radius: float = settings.quad_radius
    tail_tol: float = settings.quad_tail_tol
    panel: int = 32
    max_points: int = 4_000_000
    count_margin: int = 0

    def __post_init__(self):
        if self.nodes_per_dim < 64:
            raise ValueError(f"node count must be at least 64, got {self.nodes_per_dim}")
        if self.radius < 8:
            raise ValueError(f"truncation radius must be at least 8, got {self.radius}")
        if not (0 < self.tail_tol <= 1e-12):
            raise ValueError(f"tail tolerance must be in (0, 1e-12], got {self.tail_tol}")

    def refined(self) -> "QuadratureScheme":
        """Twice the nodes, a hundredfold smaller Poisson tail and 16 more counts per Poisson axis."""
        return replace(
            self,
            nodes_per_dim=2 * self.nodes_per_dim,
            tail_tol=self.tail_tol * 1e-2,
            count_margin=self.count_margin + 16,
        )

    def _gaussian_nodes(self, n_gaussian: int, requested: int, other_points: int) -> int:
        """Largest panel multiple up to the request keeping the whole tensor product within max_points."""
        requested = int(math.ceil(requested / self.panel)) * self.panel
        if n_gaussian == 0:
            return requested
        budget = self.max_points // other_points
        per_axis = int(round(budget ** (1.0 / n_gaussian)))
        while per_axis > 0 and per_axis ** n_gaussian > budget:
            per_axis -= 1
        nodes = min(requested, (per_axis // self.panel) * self.panel)
        if nodes < 64:
            raise QuadratureNonConvergence(
                f"{other_points} count nodes leave room for only {per_axis} Gaussian nodes per "
                f"coordinate within max_points={self.max_points}"
            )
        if nodes < requested:
            LOG.debug(f"Capping Gaussian nodes at {nodes} per coordinate for d_gauss={n_gaussian}")
        return nodes

    def _count_axes(
        self,
        kernel: KernelSpec,
        mixings: Sequence[DiscreteMixing],
        reference: Optional[DiscreteMixing]
    ) -> Dict[int, np.ndarray]:
        all_atoms = [g.atoms for g in mixings] + ([reference.atoms] if reference is not None else [])
        axes = {}
        for l in kernel.poisson_coords:
            top = kernel.theta_hi[l]
            if all_atoms:
                top = max(float(a[:, l].max()) for a in all_atoms)
            rate = top
            if reference is not None:
                rate = max(rate, top ** 2 / float(reference.atoms[:, l].min()))
            cutoff = chernoff_cutoff(rate, self.tail_tol) + self.count_margin
            axes[l] = np.arange(cutoff + 1, dtype=float)
        return axes

    def grid(
        self,
        kernel: KernelSpec,
        mixings: Sequence[DiscreteMixing] = (),
        reference: Optional[DiscreteMixing] = None
    ) -> QuadratureGrid:
        """
        Tensor-product rule for integrals against mu.

        Args:
            kernel: Kernel specification (box and coordinate types)
            mixings: Mixing distributions whose marginals enter the integrand
            reference: Denominator mixing of a ratio integrand; its smallest
                rate widens the Poisson cutoff for terms like f_g^2 / f_g0

        Returns:
            QuadratureGrid with at most max_points nodes

        Raises:
            QuadratureNonConvergence: the count axes alone leave no room for
                a 64-node Gaussian rule within max_points
        """
        if kernel.d > 3:
            raise ValueError(f"quadrature supports d <= 3, got d={kernel.d}")
        counts = self._count_axes(kernel, mixings, reference)
        count_points = int(np.prod([axis.shape[0] for axis in counts.values()], dtype=np.int64))
        if count_points > self.max_points:
            raise QuadratureNonConvergence(f"count axes need {count_points} nodes, above max_points={self.max_points}")
        n_gauss = self._gaussian_nodes(kernel.b, self.nodes_per_dim, count_points)

        axes, axis_weights = [], []
        for l in range(kernel.d):
            if kernel.is_gaussian(l):
                pts, wts = composite_gauss_legendre(
                    kernel.theta_lo[l] - self.radius, kernel.theta_hi[l] + self.radius, n_gauss, self.panel
                )
            else:
                pts = counts[l]
                wts = np.ones_like(pts)
            axes.append(pts)
            axis_weights.append(wts)

        mesh = np.meshgrid(*axes, indexing="ij")
        points = np.stack([m.ravel() for m in mesh], axis=1)
        wmesh = np.meshgrid(*axis_weights, indexing="ij")
        weights = np.prod(np.stack([m.ravel() for m in wmesh], axis=1), axis=1)
        return QuadratureGrid(points=points, weights=weights)

    def levels(
        self,
        kernel: KernelSpec,
        mixings: Sequence[DiscreteMixing] = (),
        reference: Optional[DiscreteMixing] = None
    ) -> Tuple[QuadratureGrid, QuadratureGrid]:
        """
        A rule and its refinement, both within max_points.

        The coarse Gaussian node count is lowered when needed so that the
        refined rule still doubles it inside the budget.

        Raises:
            QuadratureNonConvergence: the budget cannot hold a strictly finer
                second level
        """
        fine = self.refined()
        fine_counts = fine._count_axes(kernel, mixings, reference)
        count_points = int(np.prod([axis.shape[0] for axis in fine_counts.values()], dtype=np.int64))
        if count_points > self.max_points:
            raise QuadratureNonConvergence(f"refined count axes need {count_points} nodes, above max_points={self.max_points}")
        scheme = self
        if kernel.b > 0:
            fine_nodes = self._gaussian_nodes(kernel.b, fine.nodes_per_dim, count_points)
            coarse_nodes = (min(self.nodes_per_dim, fine_nodes // 2) // self.panel) * self.panel
            if coarse_nodes < 64:
                raise QuadratureNonConvergence(
                    f"max_points={self.max_points} cannot hold a refinement of a 64-node Gaussian rule"
                )
            scheme = replace(self, nodes_per_dim=coarse_nodes)
        coarse_grid = scheme.grid(kernel, mixings, reference)
        fine_grid = scheme.refined().grid(kernel, mixings, reference)
        if fine_grid.size <= coarse_grid.size:
            raise QuadratureNonConvergence(f"refined rule has {fine_grid.size} nodes, not more than {coarse_grid.size}")
        return coarse_grid, fine_grid
