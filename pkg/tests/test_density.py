"""
Test marginal densities, divergences, posterior quantities and functionals.
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import norm

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.data import Dataset
from src.density import (
    Functional,
    QuadratureScheme,
    chi_square,
    chi_square_bounds,
    chi_square_point_mass,
    log_likelihood,
    log_mixture_densities,
    mixture_density,
    plugin_functional,
    posterior_error_envelope,
    posterior_mean,
    posterior_mean_mse,
    posterior_means,
    series_ratio,
)
from src.kernel import KernelSpec, log_component_matrix
from src.mixing import DiscreteMixing
from src.utils.errors import QuadratureNonConvergence, TruncationError


def _random_mixing(rng, lo: float, hi: float, max_atoms: int) -> DiscreteMixing:
    J = int(rng.integers(1, max_atoms + 1))
    return DiscreteMixing.create(rng.uniform(lo, hi, J), rng.dirichlet(np.ones(J)))


def _direct_ratio(g: DiscreteMixing, theta0, kernel: KernelSpec, X: np.ndarray) -> np.ndarray:
    """f_g(x) / p_theta0(x) - 1 from the densities themselves."""
    log_p0 = log_component_matrix(kernel, np.atleast_2d(theta0), X)[:, 0]
    return np.expm1(log_mixture_densities(g, kernel, X) - log_p0)


def _posterior_error(g, g0, kernel, x) -> float:
    return float(np.linalg.norm(posterior_mean(g, kernel, x) - posterior_mean(g0, kernel, x)))


# ==================== Marginals ====================

def test_point_mass_marginal(gaussian_kernel):
    """A point mass marginal is the component density."""
    g = DiscreteMixing.point_mass([0.0])
    assert mixture_density(g, gaussian_kernel, 0.0) == pytest.approx(0.3989423, abs=1e-7)


def test_symmetric_marginal(gaussian_kernel):
    """Symmetric two-point mixture at the origin is phi(1)."""
    g = DiscreteMixing.create([-1.0, 1.0], [0.5, 0.5])
    assert mixture_density(g, gaussian_kernel, 0.0) == pytest.approx(norm.pdf(1.0), rel=1e-12)
    assert norm.pdf(1.0) == pytest.approx(0.2419707, abs=1e-7)


def test_poisson_marginal(poisson_kernel):
    """Zero-count mass of a two-point Poisson mixture."""
    g = DiscreteMixing.create([1.0, 2.0], [0.5, 0.5])
    expected = 0.5 * math.exp(-1.0) + 0.5 * math.exp(-2.0)
    assert mixture_density(g, poisson_kernel, 0) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(0.2516074, abs=1e-7)


def test_log_likelihood_single(gaussian_kernel):
    """Single standard normal observation at its mode."""
    data = Dataset.from_array([0.0], gaussian_kernel)
    assert log_likelihood(DiscreteMixing.point_mass([0.0]), gaussian_kernel, data) == pytest.approx(-0.9189385, abs=1e-7)


def test_log_likelihood_additive(gaussian_kernel, two_point):
    """Duplicating the data doubles the log-likelihood."""
    data = Dataset.from_array([0.1, -0.7, 1.3], gaussian_kernel)
    doubled = data.concat(data)
    single = log_likelihood(two_point, gaussian_kernel, data)
    assert log_likelihood(two_point, gaussian_kernel, doubled) == pytest.approx(2.0 * single, rel=1e-14)


def test_log_likelihood_poisson(poisson_kernel):
    """log e^-1 + log(e^-1 / 1!) = -2."""
    data = Dataset.from_array([0, 1], poisson_kernel)
    assert log_likelihood(DiscreteMixing.point_mass([1.0]), poisson_kernel, data) == pytest.approx(-2.0, abs=1e-12)


# ==================== Quadrature ====================

def test_refined_rule_is_strictly_finer_in_three_gaussian_dims():
    """Both levels fit the budget and the refined one has more nodes per axis."""
    kernel = KernelSpec(d=3, b=3, theta_lo=(-1.0, -1.0, -1.0), theta_hi=(1.0, 1.0, 1.0))
    scheme = QuadratureScheme(max_points=2_100_000)
    coarse, fine = scheme.levels(kernel)
    assert len(np.unique(coarse.points[:, 0])) == 64
    assert len(np.unique(fine.points[:, 0])) == 128
    assert fine.size <= scheme.max_points


def test_budget_counts_poisson_axes():
    """Gaussian nodes shrink so the full tensor product stays within max_points."""
    kernel = KernelSpec(d=3, b=2, theta_lo=(-1.0, -1.0, 0.5), theta_hi=(1.0, 1.0, 4.0))
    single = QuadratureScheme(max_points=300_000)
    assert single.grid(kernel).size <= 300_000

    scheme = QuadratureScheme(max_points=1_000_000)
    coarse, fine = scheme.levels(kernel)
    assert coarse.size < fine.size <= scheme.max_points
    assert len(np.unique(fine.points[:, 0])) == 2 * len(np.unique(coarse.points[:, 0]))


def test_budget_too_small_for_refinement():
    """No strictly finer level fits, so refinement raises instead of repeating the rule."""
    kernel = KernelSpec(d=3, b=3, theta_lo=(-1.0, -1.0, -1.0), theta_hi=(1.0, 1.0, 1.0))
    with pytest.raises(QuadratureNonConvergence):
        QuadratureScheme(max_points=1_000_000).levels(kernel)


def test_poisson_refinement_adds_counts(poisson_kernel):
    """Count-only rules also grow under refinement."""
    g = DiscreteMixing.create([1.0, 3.0], [0.5, 0.5])
    coarse, fine = QuadratureScheme().levels(poisson_kernel, [g], reference=g)
    assert fine.size > coarse.size


# ==================== Divergences ====================

def test_chi_square_identical(gaussian_kernel, two_point):
    """Identical marginals give zero divergences."""
    result = chi_square(two_point, two_point, gaussian_kernel)
    assert abs(result.chi_square) <= 1e-12
    assert abs(result.hellinger_sq) <= 1e-12


def test_chi_square_gaussian_shift(gaussian_kernel):
    """chi^2(N(1,1), N(0,1)) = e - 1."""
    result = chi_square(DiscreteMixing.point_mass([1.0]), DiscreteMixing.point_mass([0.0]), gaussian_kernel)
    assert result.chi_square == pytest.approx(math.e - 1.0, rel=1e-8)


def test_chi_square_poisson_shift(poisson_kernel):
    """chi^2(Poi(2), Poi(1)) = e^((2-1)^2 / 1) - 1."""
    result = chi_square(DiscreteMixing.point_mass([2.0]), DiscreteMixing.point_mass([1.0]), poisson_kernel)
    assert result.chi_square == pytest.approx(math.e - 1.0, rel=1e-8)


def test_chi_square_matches_closed_form(mixed_kernel):
    """Quadrature agrees with the point-mass closed form on a mixed kernel."""
    g = DiscreteMixing.create([[0.2, 1.5], [-0.4, 2.5]], [0.3, 0.7])
    theta0 = [0.0, 2.0]
    exact = chi_square_point_mass(g, theta0, mixed_kernel)
    numeric = chi_square(g, DiscreteMixing.point_mass(theta0), mixed_kernel, QuadratureScheme(nodes_per_dim=256))
    assert numeric.chi_square == pytest.approx(exact, rel=1e-7)


def test_chi_square_dominates_hellinger(gaussian_kernel, poisson_kernel):
    """chi^2 >= H^2 >= 0 over random pairs of both families."""
    rng = np.random.default_rng(41)
    for kernel, lo, hi in ((gaussian_kernel, -1.0, 1.0), (poisson_kernel, 0.5, 4.0)):
        for _ in range(15):
            g = _random_mixing(rng, lo, hi, 3)
            g0 = _random_mixing(rng, lo, hi, 3)
            result = chi_square(g, g0, kernel)
            assert result.chi_square >= result.hellinger_sq >= 0.0


def test_bounds_vanish_for_identical(gaussian_kernel, two_point):
    """Both sides of the sandwich are zero when g = g0."""
    bound = chi_square_bounds(two_point, two_point, [-0.5], 8, gaussian_kernel)
    assert bound.lower == 0.0
    assert bound.upper_partial == 0.0


def test_bounds_sandwich_point_mass(gaussian_kernel):
    """Sandwich around e^(theta^2) - 1 with an exact partial sum."""
    g = DiscreteMixing.point_mass([0.5])
    g0 = DiscreteMixing.point_mass([0.0])
    exact = math.exp(0.25) - 1.0
    bound = chi_square_bounds(g, g0, [0.0], 20, gaussian_kernel)
    assert bound.lower <= exact * (1 + 1e-9)
    assert bound.upper >= exact * (1 - 1e-9)
    assert bound.upper_partial == pytest.approx(exact, rel=1e-9)


@pytest.mark.parametrize("family,count", [("gaussian", 150), ("poisson", 50)])
def test_bounds_sandwich_random_pairs(family, count, gaussian_kernel, poisson_kernel):
    """lower <= quadrature chi^2 <= upper_partial + tail_estimate on random pairs."""
    kernel, lo, hi = (gaussian_kernel, -1.0, 1.0) if family == "gaussian" else (poisson_kernel, 0.5, 4.0)
    rng = np.random.default_rng(52 if family == "gaussian" else 53)
    for _ in range(count):
        g0 = _random_mixing(rng, lo, hi, 2)
        g = _random_mixing(rng, lo, hi, 3)
        bound = chi_square_bounds(g, g0, g0.highest_weight_atom(), 24, kernel)
        chi2 = chi_square(g, g0, kernel).chi_square
        assert bound.lower <= chi2 * (1 + 1e-9) + 1e-12
        assert chi2 <= bound.upper + 1e-8


def test_series_ratio_point_mass(gaussian_kernel):
    """Hermite series of a shifted point mass is exp(theta x - theta^2 / 2) - 1."""
    g = DiscreteMixing.point_mass([0.5])
    X = np.array([[-1.0], [0.3], [2.0]])
    expected = np.exp(0.5 * X[:, 0] - 0.125) - 1.0
    assert np.allclose(series_ratio(g, [0.0], gaussian_kernel, X, 30), expected, rtol=1e-10, atol=1e-14)


def test_series_ratio_poisson_counts(poisson_kernel):
    """Charlier series matches the density ratio for counts up to 30."""
    g = DiscreteMixing.create([1.0, 3.0], [0.5, 0.5])
    X = np.arange(31, dtype=float).reshape(-1, 1)
    expected = _direct_ratio(g, [1.0], poisson_kernel, X)
    got = series_ratio(g, [1.0], poisson_kernel, X, 40)
    assert np.allclose(got, expected, rtol=1e-6, atol=1e-6)


@pytest.mark.parametrize("family", ["gaussian", "poisson"])
def test_series_ratio_random_mixings(family, gaussian_kernel, poisson_kernel):
    """Order-40 truncation agrees with f_g / p_theta0 - 1 for random g."""
    rng = np.random.default_rng(61 if family == "gaussian" else 62)
    if family == "gaussian":
        kernel, lo, hi, theta0 = gaussian_kernel, -1.0, 1.0, 0.0
        X = np.linspace(-5.0, 5.0, 21).reshape(-1, 1)
    else:
        kernel, lo, hi, theta0 = poisson_kernel, 0.5, 4.0, 2.0
        X = np.arange(31, dtype=float).reshape(-1, 1)
    for _ in range(20):
        g = _random_mixing(rng, lo, hi, 4)
        expected = _direct_ratio(g, [theta0], kernel, X)
        got = series_ratio(g, [theta0], kernel, X, 40)
        assert np.all(np.abs(got - expected) <= 1e-6 * np.maximum(1.0, np.abs(expected)))


def test_series_ratio_mixed_kernel(mixed_kernel):
    """Product expansion on a Gaussian-Poisson kernel."""
    g = DiscreteMixing.create([[0.4, 1.2], [-0.6, 3.0]], [0.35, 0.65])
    X = np.array([[x1, x2] for x1 in (-2.0, 0.0, 2.5) for x2 in (0.0, 4.0, 12.0)])
    expected = _direct_ratio(g, [0.0, 2.0], mixed_kernel, X)
    got = series_ratio(g, [0.0, 2.0], mixed_kernel, X, 40)
    assert np.all(np.abs(got - expected) <= 1e-6 * np.maximum(1.0, np.abs(expected)))


def test_bounds_reject_non_atom(gaussian_kernel, two_point):
    """theta0 must be an atom of g0."""
    with pytest.raises(ValueError):
        chi_square_bounds(two_point, two_point, [0.0], 8, gaussian_kernel)


# ==================== Posterior means ====================

def test_posterior_mean_degenerate(gaussian_kernel):
    """A point mass prior pins the posterior mean."""
    g = DiscreteMixing.point_mass([0.3])
    means = posterior_means(g, gaussian_kernel, np.array([[-2.0], [0.0], [5.0]]))
    assert np.allclose(means, 0.3)


def test_posterior_mean_two_atoms(gaussian_kernel):
    """Two-atom posterior mean at the midpoint and at the origin."""
    g = DiscreteMixing.create([0.0, 1.0], [0.5, 0.5])
    assert posterior_mean(g, gaussian_kernel, 0.5)[0] == pytest.approx(0.5, abs=1e-14)
    expected = norm.pdf(1.0) / (norm.pdf(0.0) + norm.pdf(1.0))
    assert posterior_mean(g, gaussian_kernel, 0.0)[0] == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(0.3775407, abs=1e-7)


def test_posterior_mse_identical(gaussian_kernel, two_point):
    """Zero risk when g = g0."""
    assert posterior_mean_mse(two_point, two_point, gaussian_kernel) == pytest.approx(0.0, abs=1e-14)


def test_posterior_mse_constant_shift(gaussian_kernel):
    """Point masses 0.1 apart give MSE 0.01."""
    mse = posterior_mean_mse(DiscreteMixing.point_mass([0.1]), DiscreteMixing.point_mass([0.0]), gaussian_kernel)
    assert mse == pytest.approx(0.01, rel=1e-8)


def test_posterior_mse_monte_carlo(gaussian_kernel):
    """Quadrature risk sits within three standard errors of a Monte Carlo estimate."""
    g = DiscreteMixing.create([-0.8, 0.4], [0.5, 0.5])
    g0 = DiscreteMixing.create([-0.2, 0.6], [0.3, 0.7])
    rng = np.random.default_rng(7)
    n = 200_000
    theta = rng.choice(g0.atoms[:, 0], size=n, p=g0.weights)
    X = (theta + rng.standard_normal(n)).reshape(-1, 1)
    sq = np.sum((posterior_means(g, gaussian_kernel, X) - posterior_means(g0, gaussian_kernel, X)) ** 2, axis=1)
    quad = posterior_mean_mse(g, g0, gaussian_kernel)
    assert abs(quad - sq.mean()) <= 3.0 * sq.std() / math.sqrt(n)


# ==================== Envelope ====================

def test_envelope_identical(gaussian_kernel, two_point):
    """The envelope is zero when g = g0."""
    env = posterior_error_envelope(two_point, two_point, gaussian_kernel, 0.2)
    assert env.value == 0.0
    assert env.bound == 0.0


def test_envelope_dominates_error(gaussian_kernel):
    """Bound covers the true posterior-mean error with a small slack."""
    g = DiscreteMixing.create([-0.5, 0.5], [0.5, 0.5])
    g0 = DiscreteMixing.create([-0.5, 0.5], [0.6, 0.4])
    for x in (-1.0, 0.3, 1.5):
        env = posterior_error_envelope(g, g0, gaussian_kernel, x)
        assert env.value + env.slack >= _posterior_error(g, g0, gaussian_kernel, x)
        assert env.slack <= 1e-3 * env.value + 1e-300


def test_envelope_dominates_random_gaussian_points(gaussian_kernel):
    """Dominance at 100 random (pair, observation) points."""
    rng = np.random.default_rng(71)
    for _ in range(100):
        g0 = _random_mixing(rng, -1.0, 1.0, 2)
        g = _random_mixing(rng, -1.0, 1.0, 3)
        x = float(g0.highest_weight_atom()[0] + rng.uniform(-4.0, 4.0))
        env = posterior_error_envelope(g, g0, gaussian_kernel, x)
        assert env.bound >= _posterior_error(g, g0, gaussian_kernel, x)


@pytest.mark.parametrize("g,g0", [
    (([1.2, 2.5], [0.4, 0.6]), ([1.0, 3.0], [0.5, 0.5])),
    (([2.0], [1.0]), ([1.0, 3.0], [0.5, 0.5])),
    (([0.7, 3.6], [0.3, 0.7]), ([2.0], [1.0])),
    (([1.5, 2.5, 3.5], [0.2, 0.5, 0.3]), ([1.0, 3.0], [0.7, 0.3])),
])
def test_envelope_dominates_poisson_counts(g, g0, poisson_kernel):
    """Dominance for every count 0..30 on Poisson pairs."""
    g, g0 = DiscreteMixing.create(*g), DiscreteMixing.create(*g0)
    for x in range(31):
        env = posterior_error_envelope(g, g0, poisson_kernel, x)
        assert env.bound >= _posterior_error(g, g0, poisson_kernel, x), x


def test_envelope_rejects_short_truncation(gaussian_kernel, two_point):
    """kmax below 2J + 10 is refused."""
    with pytest.raises(ValueError):
        posterior_error_envelope(DiscreteMixing.point_mass([0.0]), two_point, gaussian_kernel, 0.0, kmax=5)


def test_envelope_fixed_truncation_too_short(gaussian_kernel):
    """A fixed kmax that leaves too much slack raises."""
    g = DiscreteMixing.point_mass([0.4])
    g0 = DiscreteMixing.point_mass([0.0])
    with pytest.raises(TruncationError):
        posterior_error_envelope(g, g0, gaussian_kernel, 3.0, kmax=12)


# ==================== Functionals ====================

def test_functional_mean(gaussian_kernel):
    """Mean functional of a point mass."""
    value = plugin_functional(DiscreteMixing.point_mass([0.7]), gaussian_kernel, Functional.mean())
    assert value == pytest.approx(0.7, abs=1e-10)


def test_functional_poisson_zero_mass(poisson_kernel):
    """pmf(0) functional under Poi(1)."""
    value = plugin_functional(DiscreteMixing.point_mass([1.0]), poisson_kernel, Functional.pmf(0))
    assert value == pytest.approx(math.exp(-1.0), rel=1e-12)


def test_functional_symmetric_cdf(gaussian_kernel):
    """CDF at the center of a symmetric mixture is one half."""
    g = DiscreteMixing.create([-1.0, 1.0], [0.5, 0.5])
    assert plugin_functional(g, gaussian_kernel, Functional.cdf(0.0)) == pytest.approx(0.5, abs=1e-14)


def test_functional_pmf_needs_counts(gaussian_kernel):
    """pmf functionals need a Poisson kernel."""
    with pytest.raises(ValueError):
        plugin_functional(DiscreteMixing.point_mass([0.0]), gaussian_kernel, Functional.pmf(0))


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
