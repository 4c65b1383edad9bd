"""
Shared fixtures for the test suite.
"""

import sys
from pathlib import Path

import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.kernel import KernelSpec
from src.mixing import DiscreteMixing
from src.npmle import SolverConfig



@pytest.fixture
def gaussian_kernel():
    return KernelSpec.gaussian(-1.0, 1.0)


@pytest.fixture
def poisson_kernel():
    return KernelSpec.poisson(0.5, 4.0)


@pytest.fixture
def mixed_kernel():
    """Gaussian first coordinate, Poisson second."""
    return KernelSpec(d=2, b=1, theta_lo=(-1.0, 0.5), theta_hi=(1.0, 4.0))


@pytest.fixture
def two_point():
    return DiscreteMixing.create([-0.5, 0.5], [0.6, 0.4])


@pytest.fixture
def fast_solver():
    return SolverConfig(grid_per_dim=64, tol_gap=1e-6, max_sweeps=500, em_inner=10, refine_levels=2, random_probes=8)
