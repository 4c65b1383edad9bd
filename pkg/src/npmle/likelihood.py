"""
Likelihood ratio statistic and the G_n(c) membership test.
"""

from dataclasses import asdict, dataclass
from typing import Any, Dict

from ..data.dataset import Dataset
from ..density.marginal import log_likelihood
from ..kernel import KernelSpec
from ..mixing import DiscreteMixing


@dataclass(frozen=True)
class GnMembership:
    """Result of testing l_n(f_g) >= l_n(f_g0) + c."""
    member: bool
    margin: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def lrt(g_hat: DiscreteMixing, g0: DiscreteMixing, data: Dataset, kernel: KernelSpec) -> float:
    """L_n = 2 {l_n(f_g_hat) - l_n(f_g0)}."""
    return 2.0 * (log_likelihood(g_hat, kernel, data) - log_likelihood(g0, kernel, data))


def in_Gn(g: DiscreteMixing, g0: DiscreteMixing, data: Dataset, c: float, kernel: KernelSpec) -> GnMembership:
    """
    Membership of g in G_n(c) = {g : l_n(f_g) - l_n(f_g0) >= c}.

    Args:
        g: Candidate mixing distribution
        g0: Reference mixing distribution
        data: Observations
        c: Likelihood slack (negative values admit near-maximizers)
        kernel: Kernel specification

    Returns:
        GnMembership with margin l_n(f_g) - l_n(f_g0) - c
    """
    margin = log_likelihood(g, kernel, data) - log_likelihood(g0, kernel, data) - c
    return GnMembership(member=margin >= 0.0, margin=margin)
