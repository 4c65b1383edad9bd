"""
Orthonormal polynomial basis of g0 on one coordinate (Gram–Schmidt).
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from ..utils.errors import SingularGramError
from .distribution import DiscreteMixing, MixingDescriptor

LOG = logging.getLogger(__name__)

SINGULAR_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class OrthoBasis:
    """
    Polynomials q_0 = 1, q_1..q_K in theta[coord], orthonormal under g0.

    coeffs[k] holds the monomial coefficients of q_k in increasing powers.
    gram (optional) is the K x K matrix of <h_k, h_k'> under f_g0, attached
    once a kernel is known.
    """
    g0: MixingDescriptor
    coord: int
    coeffs: np.ndarray
    gram: Optional[np.ndarray] = None

    @property
    def K(self) -> int:
        return self.coeffs.shape[0] - 1

    def evaluate(self, theta_coord: np.ndarray) -> np.ndarray:
        """(m, K + 1) matrix of q_k(theta) at m coordinate values."""
        t = np.asarray(theta_coord, dtype=float).ravel()
        powers = np.vander(t, self.K + 1, increasing=True)
        return powers @ self.coeffs.T

    def evaluate_atoms(self, atoms: np.ndarray) -> np.ndarray:
        """q_1..q_K at full atoms (J, d), shape (J, K)."""
        return self.evaluate(np.asarray(atoms)[:, self.coord])[:, 1:]

    def with_gram(self, gram: np.ndarray) -> "OrthoBasis":
        gram = np.asarray(gram, dtype=float)
        if gram.shape != (self.K, self.K):
            raise ValueError(f"gram must be {self.K}x{self.K}")
        if not np.allclose(gram, gram.T, atol=1e-12, rtol=1e-10):
            raise ValueError("gram matrix is not symmetric")
        try:
            np.linalg.cholesky(gram)
        except np.linalg.LinAlgError as e:
            raise SingularGramError("h-function Gram matrix is not positive definite") from e
        return replace(self, gram=gram)


def _coordinate_measure(g0: MixingDescriptor, coord: int, nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    if isinstance(g0, DiscreteMixing):
        return g0.atoms[:, coord], g0.weights
    return g0.coordinate_quadrature(coord, nodes)


def orthonormal_basis(g0: MixingDescriptor, K: int, coord: int = 0, nodes: int = 256) -> OrthoBasis:
    """
    Modified Gram–Schmidt on 1, t, t^2, ..., t^K under the coord-marginal of g0.

    Discrete g0 uses exact weighted sums over its atoms; a uniform box uses
    Gauss–Legendre quadrature with `nodes` points.

    Raises:
        SingularGramError: a monomial is numerically dependent on the lower
            ones, which happens when the marginal has at most K support points
    """
    if K < 0:
        raise ValueError(f"K must be nonnegative, got {K}")
    if not 0 <= coord < g0.d:
        raise ValueError(f"coordinate {coord} out of range for d={g0.d}")

    t, w = _coordinate_measure(g0, coord, nodes)
    powers = np.vander(t, K + 1, increasing=True)

    def inner(a, b):
        return float(np.sum(w * a * b))

    basis_values = []
    coeffs = np.zeros((K + 1, K + 1))
    for k in range(K + 1):
        v = powers[:, k].copy()
        c = np.zeros(K + 1)
        c[k] = 1.0
        raw_norm = np.sqrt(inner(v, v))
        # two passes keep orthogonality at machine precision
        for _ in range(2):
            for j, q in enumerate(basis_values):
                proj = inner(v, q)
                v = v - proj * q
                c = c - proj * coeffs[j]
        norm = np.sqrt(inner(v, v))
        if raw_norm == 0.0 or norm <= SINGULAR_RTOL * raw_norm:
            raise SingularGramError(
                f"Gram matrix is numerically singular at degree {k}: "
                f"coordinate {coord} of g0 has too few support points for K={K}"
            )
        basis_values.append(v / norm)
        coeffs[k] = c / norm

    LOG.debug(f"Built orthonormal basis of degree {K} on coordinate {coord}")
    return OrthoBasis(g0=g0, coord=coord, coeffs=coeffs)
