"""
Gap between n chi^2 and the likelihood ratio statistic.
"""

from typing import Optional

from ..data.dataset import Dataset
from ..density.divergence import chi_square
from ..density.quadrature import QuadratureScheme
from ..kernel import KernelSpec
from ..mixing import DiscreteMixing
from ..npmle.likelihood import lrt


def asy_gap(
    data: Dataset,
    g_hat: DiscreteMixing,
    g0: DiscreteMixing,
    kernel: KernelSpec,
    scheme: Optional[QuadratureScheme] = None
) -> float:
    """
    |n chi^2(f_g_hat, f_g0) - 2 {l_n(f_g_hat) - l_n(f_g0)}|.

    The two sides agree to o_P(1) when g0 is finitely discrete.
    """
    nchisq = data.n * chi_square(g_hat, g0, kernel, scheme).chi_square
    return abs(nchisq - lrt(g_hat, g0, data, kernel))
