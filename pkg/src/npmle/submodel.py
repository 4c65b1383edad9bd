"""
Order-K submodel MLE: multiplicative polynomial perturbations of g0.

g_c puts weight w_j (1 + sum_k c_k q_k(theta_j)) on each atom of the
(discretized) g0. The log-likelihood is concave in c and the feasible set is
the polytope {c : 1 + Q c >= 0}, so a projected Newton ascent with an active
set reaches the global optimum.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import nnls

from ..config import settings
from ..data.dataset import Dataset
from ..density.marginal import log_mixture_densities
from ..density.quadrature import QuadratureScheme
from ..kernel import KernelSpec, log_component_matrix
from ..mixing import DiscreteMixing, MixingDescriptor, OrthoBasis, as_discrete, orthonormal_basis
from ..utils.errors import NonConvergence
from ..utils.helpers import compensated_sum

LOG = logging.getLogger(__name__)

ACTIVE_TOL = 1e-10
ARMIJO = 1e-4


@dataclass(frozen=True, eq=False)
class SubmodelFit:
    """Fitted coefficients c over G^{<=K} and the resulting mixing distribution."""
    coeffs: np.ndarray
    basis: OrthoBasis
    loglik: float
    loglik_g0: float
    g0_atoms: DiscreteMixing
    iterations: int
    pg_norm: float
    values: np.ndarray = field(repr=False)

    @property
    def K(self) -> int:
        return self.coeffs.shape[0]

    @property
    def statistic(self) -> float:
        """2 {l_n(f_g_c) - l_n(f_g0)}."""
        return 2.0 * (self.loglik - self.loglik_g0)

    def mixing(self) -> DiscreteMixing:
        """g_c on the atoms of the discretized g0."""
        weights = self.g0_atoms.weights * np.maximum(1.0 + self.values @ self.coeffs, 0.0)
        return DiscreteMixing.create(self.g0_atoms.atoms, weights, merge_tol=0.0)


def _basis_values(basis: OrthoBasis, g0: DiscreteMixing) -> np.ndarray:
    """q_1..q_K at the atoms of g0, centered so that sum_j w_j Q_jk = 0 exactly."""
    Q = basis.evaluate_atoms(g0.atoms)
    drift = g0.weights @ Q
    if np.max(np.abs(drift), initial=0.0) > 1e-8:
        LOG.debug(f"Centering basis on discretized g0 (max drift {np.max(np.abs(drift)):.2e})")
    return Q - drift[None, :]


def _tangent_residual(grad: np.ndarray, A_active: np.ndarray) -> np.ndarray:
    """Projection of grad onto the tangent cone {d : A_active d >= 0}."""
    if A_active.shape[0] == 0:
        return grad
    lam, _ = nnls(A_active.T, -grad)
    return grad + A_active.T @ lam


def solve_submodel(
    data: Dataset,
    g0: MixingDescriptor,
    K: int,
    kernel: KernelSpec,
    basis: Optional[OrthoBasis] = None,
    tol: float = 1e-8,
    max_iter: int = 500
) -> SubmodelFit:
    """
    Maximize sum_i log f_{g_c}(X_i) over c in the reweighting polytope.

    Args:
        data: Observations
        g0: Discrete or uniform null mixing (uniform is discretized on
            settings.uniform_atoms quantile atoms)
        K: Submodel order
        kernel: Kernel specification
        basis: Orthonormal basis of g0 with K polynomials (built if omitted)
        tol: Stop once the projected-gradient norm is at most tol
        max_iter: Iteration budget

    Returns:
        SubmodelFit

    Raises:
        SingularGramError: g0 has too few atoms for an order-K basis
        NonConvergence: projected-gradient norm still above tol after max_iter
    """
    if K < 1:
        raise ValueError(f"K must be at least 1, got {K}")
    data.check_kernel(kernel)
    basis = basis or orthonormal_basis(g0, K)
    if basis.K != K:
        raise ValueError(f"basis has {basis.K} polynomials, expected K={K}")

    g0_atoms = as_discrete(g0, settings.uniform_atoms)
    Q = _basis_values(basis, g0_atoms)

    logp = log_component_matrix(kernel, g0_atoms.atoms, data.values)
    shift = logp.max(axis=1)
    P = np.exp(logp - shift[:, None]) * g0_atoms.weights[None, :]
    f0 = P.sum(axis=1)
    H = P @ Q
    offset = compensated_sum(shift)

    def objective(c):
        f = f0 + H @ c
        if np.any(f <= 0.0):
            return -math.inf
        return compensated_sum(np.log(f))

    c = np.zeros(K)
    value = objective(c)
    loglik_g0 = value + offset
    pg_norm = math.inf

    for it in range(1, max_iter + 1):
        f = f0 + H @ c
        Hf = H / f[:, None]
        grad = Hf.sum(axis=0)
        slack = 1.0 + Q @ c
        active = slack <= ACTIVE_TOL
        residual = _tangent_residual(grad, Q[active])
        pg_norm = float(np.linalg.norm(residual))
        if pg_norm <= tol:
            break

        hess = Hf.T @ Hf
        # Newton on the subspace of binding constraints, else steepest feasible ascent
        direction = residual
        use_newton = False
        binding = Q[active]
        if binding.shape[0]:
            _, s, vt = np.linalg.svd(binding)
            rank = int(np.sum(s > 1e-12 * max(s.max(), 1.0)))
            Z = vt[rank:].T
        else:
            Z = np.eye(K)
        if Z.shape[1]:
            try:
                newton = Z @ np.linalg.solve(Z.T @ hess @ Z, Z.T @ grad)
                if newton @ grad > 0 and np.all(binding @ newton >= -1e-12):
                    direction = newton
                    use_newton = True
            except np.linalg.LinAlgError:
                pass

        curvature = float(direction @ hess @ direction)
        step = 1.0 if use_newton else (direction @ grad) / max(curvature, 1e-300)
        moving = Q @ direction
        blocking = (moving < 0) & ~active
        if np.any(blocking):
            step = min(step, float(np.min(slack[blocking] / -moving[blocking])))

        slope = float(grad @ direction)
        accepted = False
        for _ in range(60):
            trial = c + step * direction
            trial_value = objective(trial)
            if trial_value >= value + ARMIJO * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            LOG.debug(f"   submodel iteration {it}: line search stalled at pg={pg_norm:.3e}")
            continue
        c = _clip_to_polytope(trial, Q)
        value = objective(c)
        LOG.debug(f"   submodel iteration {it}: pg={pg_norm:.3e} loglik={value + offset:.17g}")
    else:
        raise NonConvergence(f"submodel fit did not converge in {max_iter} iterations (pg norm {pg_norm:.3e} > {tol:g})")

    fit = SubmodelFit(
        coeffs=c,
        basis=basis,
        loglik=value + offset,
        loglik_g0=loglik_g0,
        g0_atoms=g0_atoms,
        iterations=it,
        pg_norm=pg_norm,
        values=Q,
    )
    LOG.debug(f"Submodel K={K}: statistic {fit.statistic:.6g} after {it} iterations")
    return fit


def _clip_to_polytope(c: np.ndarray, Q: np.ndarray, max_rounds: int = 1000) -> np.ndarray:
    """Repeatedly project onto the most violated halfspace 1 + Q_j c >= 0."""
    for _ in range(max_rounds):
        slack = 1.0 + Q @ c
        j = int(np.argmin(slack))
        if slack[j] >= 0.0:
            return c
        row = Q[j]
        c = c - slack[j] / float(row @ row) * row
    return c


def attach_gram(basis: OrthoBasis, kernel: KernelSpec, scheme: Optional[QuadratureScheme] = None) -> OrthoBasis:
    """
    Attach the Gram matrix of the h-functions under f_g0.

    h_k(x) = sum_j w_j p_{theta_j}(x) q_k(theta_j) / f_g0(x) and
    gram[k, k'] = int h_k h_k' f_g0 dmu, the covariance of the submodel's
    chi-square(K) limit.
    """
    g0 = as_discrete(basis.g0, settings.uniform_atoms)
    Q = _basis_values(basis, g0)
    grid = (scheme or QuadratureScheme()).grid(kernel, [g0], reference=g0)
    logp = log_component_matrix(kernel, g0.atoms, grid.points)
    logf0 = log_mixture_densities(g0, kernel, grid.points)
    post = np.exp(logp - logf0[:, None]) * g0.weights[None, :]
    h = post @ Q
    mass = grid.weights * np.exp(logf0)
    gram = (h * mass[:, None]).T @ h
    return basis.with_gram(0.5 * (gram + gram.T))

