"""
Test the NPMLE solver, its certificate, the likelihood-ratio helpers and the submodel fit.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.analysis import wasserstein1
from src.data import Dataset
from src.density import chi_square, log_likelihood
from src.kernel import KernelSpec
from src.mixing import DiscreteMixing, UniformBox, orthonormal_basis, sample
from src.npmle import (
    Certificate,
    SolverConfig,
    attach_gram,
    default_probe_grid,
    directional_derivatives,
    in_Gn,
    lrt,
    optimality_gap,
    solve,
    solve_submodel,
)
from src.utils.errors import SingularGramError


# ==================== Solver ====================

def test_solver_config_validation():
    """Out-of-range knobs are refused."""
    with pytest.raises(ValueError):
        SolverConfig(grid_per_dim=16)
    with pytest.raises(ValueError):
        SolverConfig(tol_gap=1e-3)
    with pytest.raises(ValueError):
        SolverConfig(refine_levels=0)


def test_default_probe_grid_lexicographic(mixed_kernel):
    """Probe grid runs over the box in lexicographic order."""
    grid = default_probe_grid(mixed_kernel, 4)
    assert grid.shape == (16, 2)
    assert np.allclose(grid[0], [-1.0, 0.5])
    assert np.allclose(grid[1], [-1.0, 0.5 + 3.5 / 3])
    assert np.allclose(grid[-1], [1.0, 4.0])


def test_single_observation_inside_box(gaussian_kernel, fast_solver):
    """One observation inside the box gives a point mass at it."""
    data = Dataset.from_array([0.3], gaussian_kernel)
    g_hat, cert = solve(data, gaussian_kernel, fast_solver)
    assert cert.certified
    near = np.abs(g_hat.atoms[:, 0] - 0.3) < 0.05
    assert g_hat.weights[near].sum() >= 0.99
    assert g_hat.mean()[0] == pytest.approx(0.3, abs=0.01)


def test_single_observation_clamped(gaussian_kernel, fast_solver):
    """One observation outside the box puts the mass on the nearest edge."""
    data = Dataset.from_array([2.5], gaussian_kernel)
    g_hat, _ = solve(data, gaussian_kernel, fast_solver)
    assert g_hat.atoms[:, 0].max() == pytest.approx(1.0)
    assert g_hat.mean()[0] == pytest.approx(1.0, abs=0.01)


def test_one_point_grid(gaussian_kernel, fast_solver):
    """A one-point grid gives that point mass."""
    data = Dataset.from_array([-0.8, 0.1, 0.9], gaussian_kernel)
    g_hat, cert = solve(data, gaussian_kernel, fast_solver, grid=[[0.25]])
    assert g_hat.support_size == 1
    assert g_hat.atoms[0, 0] == pytest.approx(0.25)
    assert np.isfinite(cert.gap)


def test_solver_deterministic(gaussian_kernel, two_point, fast_solver):
    """Same data and seed give the same fit."""
    data = sample(two_point, gaussian_kernel, 300, seed=4)
    a, cert_a = solve(data, gaussian_kernel, fast_solver, seed=9)
    b, cert_b = solve(data, gaussian_kernel, fast_solver, seed=9)
    assert np.array_equal(a.atoms, b.atoms)
    assert np.array_equal(a.weights, b.weights)
    assert cert_a.loglik == cert_b.loglik


def test_certified_fit_properties(gaussian_kernel, two_point, fast_solver):
    """Certified fits satisfy the first-order conditions."""
    data = sample(two_point, gaussian_kernel, 500, seed=21)
    g_hat, cert = solve(data, gaussian_kernel, fast_solver, seed=1)
    assert cert.certified
    assert cert.gap <= data.n * fast_solver.tol_gap
    assert cert.support_size == g_hat.support_size
    assert g_hat.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(g_hat.atoms >= -1.0) and np.all(g_hat.atoms <= 1.0)

    # first-order conditions on the support
    derivs = directional_derivatives(g_hat, data, gaussian_kernel, g_hat.atoms)
    assert derivs.max() <= data.n * fast_solver.tol_gap + 1e-6
    assert float(g_hat.weights @ derivs) == pytest.approx(0.0, abs=1e-6)

    # concavity: l(g0) - l(g_hat) is at most the largest derivative over supp(g0)
    bound = directional_derivatives(g_hat, data, gaussian_kernel, two_point.atoms).max()
    assert lrt(g_hat, two_point, data, gaussian_kernel) >= -2.0 * max(bound, 0.0) - 1e-8


def test_poisson_fit(poisson_kernel, fast_solver):
    """Poisson fit is certified and beats the truth up to the certificate."""
    g0 = DiscreteMixing.create([1.0, 3.0], [0.5, 0.5])
    data = sample(g0, poisson_kernel, 400, seed=2)
    g_hat, cert = solve(data, poisson_kernel, fast_solver)
    assert cert.certified
    bound = directional_derivatives(g_hat, data, poisson_kernel, g0.atoms).max()
    assert cert.loglik >= log_likelihood(g0, poisson_kernel, data) - max(bound, 0.0) - 1e-8


def test_gap_at_exact_optimum(gaussian_kernel):
    """The gap vanishes at the exact optimum."""
    data = Dataset.from_array([0.4], gaussian_kernel)
    fine = np.linspace(-1.0, 1.0, 2001).reshape(-1, 1)
    assert optimality_gap(DiscreteMixing.point_mass([0.4]), data, gaussian_kernel, fine) <= 1e-6


def test_gap_far_from_data(gaussian_kernel):
    """A point mass far from the data has a large gap."""
    data = Dataset.from_array(np.full(50, 0.9), gaussian_kernel)
    assert optimality_gap(DiscreteMixing.point_mass([-1.0]), data, gaussian_kernel) > 10.0


def test_certificate_round_trip():
    """Certificate JSON form round-trips and missing fields are refused."""
    cert = Certificate(loglik=-12.5, gap=1e-9, sweeps=4, support_size=2, certified=True, level=1, seed=3, tol_gap=1e-8, n=10)
    assert Certificate.from_dict(cert.to_dict()) == cert
    with pytest.raises(ValueError):
        Certificate.from_dict({"loglik": 1.0})


@pytest.mark.parametrize("family", ["gaussian", "poisson"])
def test_directional_derivative_finite_difference(family, gaussian_kernel, poisson_kernel, two_point):
    """D(theta) matches a one-sided difference of l_n along (1 - eps) g + eps delta_theta."""
    kernel = gaussian_kernel if family == "gaussian" else poisson_kernel
    g = two_point if family == "gaussian" else DiscreteMixing.create([1.0, 3.0], [0.5, 0.5])
    data = sample(g, kernel, 100, seed=31)
    thetas = np.array([[0.1], [0.9]]) if family == "gaussian" else np.array([[0.6], [2.2]])
    eps = 1e-6
    derivs = directional_derivatives(g, data, kernel, thetas)
    base = log_likelihood(g, kernel, data)
    for theta, D in zip(thetas, derivs):
        moved = DiscreteMixing.create(
            np.vstack([g.atoms, theta]), np.append((1.0 - eps) * g.weights, eps), merge_tol=0.0
        )
        assert (log_likelihood(moved, kernel, data) - base) / eps == pytest.approx(D, rel=1e-3, abs=1e-3)


def test_sweeps_never_decrease_likelihood(gaussian_kernel):
    """Log-likelihood is nondecreasing in the number of sweeps on a fixed grid."""
    g0 = DiscreteMixing.create([-0.7, 0.0, 0.6], [0.3, 0.3, 0.4])
    data = sample(g0, gaussian_kernel, 300, seed=17)
    grid = np.linspace(-1.0, 1.0, 41).reshape(-1, 1)
    logliks = []
    for sweeps in range(1, 9):
        cfg = SolverConfig(grid_per_dim=64, tol_gap=1e-6, max_sweeps=sweeps, em_inner=5, refine_levels=1, random_probes=0)
        _, cert = solve(data, gaussian_kernel, cfg, grid=grid)
        logliks.append(cert.loglik)
    for before, after in zip(logliks, logliks[1:]):
        assert after >= before - 1e-9 * abs(before)


def test_fit_stable_under_grid_refinement(gaussian_kernel, two_point):
    """Fits on 64- and 128-point grids agree in likelihood and W1."""
    data = sample(two_point, gaussian_kernel, 300, seed=23)
    fits = []
    for per_dim in (64, 128):
        cfg = SolverConfig(grid_per_dim=per_dim, tol_gap=1e-6, max_sweeps=500, em_inner=10, refine_levels=2, random_probes=0)
        fits.append(solve(data, gaussian_kernel, cfg))
    (g_coarse, cert_coarse), (g_fine, cert_fine) = fits
    assert cert_coarse.certified and cert_fine.certified
    assert cert_fine.loglik == pytest.approx(cert_coarse.loglik, abs=0.05)
    assert wasserstein1(g_coarse, g_fine) <= 0.15


@pytest.mark.slow
def test_point_mass_rate(gaussian_kernel):
    """n chi^2 stays bounded under a point-mass truth."""
    g0 = DiscreteMixing.point_mass([0.0])
    n = 2000
    cfg = SolverConfig(tol_gap=1e-6)
    hits = 0
    seeds = range(40)
    for seed in seeds:
        data = sample(g0, gaussian_kernel, n, seed=seed)
        g_hat, _ = solve(data, gaussian_kernel, cfg, seed=seed)
        if chi_square(g_hat, g0, gaussian_kernel).chi_square <= 50.0 / n:
            hits += 1
    assert hits >= 38


# ==================== Likelihood ratio ====================

def test_lrt_identical(gaussian_kernel, two_point):
    """LRT of a law against itself is zero."""
    data = sample(two_point, gaussian_kernel, 50, seed=0)
    assert lrt(two_point, two_point, data, gaussian_kernel) == 0.0


def test_membership(gaussian_kernel, two_point):
    """Membership in G_n follows the sign of the margin."""
    data = sample(two_point, gaussian_kernel, 50, seed=0)
    inside = in_Gn(two_point, two_point, data, -1.0, gaussian_kernel)
    assert inside.member and inside.margin == pytest.approx(1.0)
    outside = in_Gn(two_point, two_point, data, 1.0, gaussian_kernel)
    assert not outside.member and outside.margin == pytest.approx(-1.0)


# ==================== Submodel ====================

def test_submodel_beats_null(gaussian_kernel):
    """The submodel fit is at least as likely as g0."""
    g0 = DiscreteMixing.create([-0.6, 0.0, 0.6], [0.3, 0.4, 0.3])
    data = sample(g0, gaussian_kernel, 400, seed=8)
    fit = solve_submodel(data, g0, 2, gaussian_kernel)
    assert fit.loglik >= fit.loglik_g0 - 1e-9
    assert fit.statistic >= -2e-8
    g_c = fit.mixing()
    assert g_c.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(g_c.weights >= 0.0)


def test_submodel_uniform_null(gaussian_kernel):
    """Submodel fits around a uniform null."""
    g0 = UniformBox(lo=(-1.0,), hi=(1.0,))
    data = sample(g0, gaussian_kernel, 300, seed=12)
    fit = solve_submodel(data, g0, 1, gaussian_kernel)
    assert fit.K == 1
    assert fit.statistic >= -2e-8
    assert np.isfinite(fit.loglik)


def test_h_gram_positive_definite(gaussian_kernel):
    """The smoothed Gram matrix is symmetric positive definite."""
    basis = attach_gram(orthonormal_basis(UniformBox(lo=(-1.0,), hi=(1.0,)), 2), gaussian_kernel)
    assert basis.gram.shape == (2, 2)
    assert np.allclose(basis.gram, basis.gram.T)
    assert np.all(np.linalg.eigvalsh(basis.gram) > 0.0)
    # smoothing by the kernel shrinks each direction
    assert np.all(np.diag(basis.gram) < 1.0)


def test_submodel_single_atom_null(gaussian_kernel):
    """A point-mass null cannot carry a submodel."""
    data = Dataset.from_array([0.1, 0.2], gaussian_kernel)
    with pytest.raises(SingularGramError):
        solve_submodel(data, DiscreteMixing.point_mass([0.0]), 1, gaussian_kernel)


def test_submodel_order_validation(gaussian_kernel, two_point):
    """K must be positive."""
    data = Dataset.from_array([0.1], gaussian_kernel)
    with pytest.raises(ValueError):
        solve_submodel(data, two_point, 0, gaussian_kernel)


def test_submodel_kernel_mismatch(two_point):
    """Data from another kernel are refused."""
    other = KernelSpec.poisson(0.5, 4.0)
    data = Dataset.from_array([1, 2], other)
    with pytest.raises(ValueError):
        solve_submodel(data, two_point, 1, KernelSpec.gaussian(-1.0, 1.0))


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
