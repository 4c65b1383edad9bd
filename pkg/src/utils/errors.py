"""
Exception types for numerical failures.

Input problems raise ValueError; everything here is a RuntimeError so that
callers can tell "bad arguments" apart from "the numerics did not work out".
"""


class NumericalError(RuntimeError):
    """Base class for numerical failures (CLI exit code 2)."""


class QuadratureNonConvergence(NumericalError):
    """Two quadrature refinement levels disagree beyond tolerance."""


class SupportMismatch(NumericalError):
    """A mixture density vanished in double precision at an observation."""


class SingularGramError(NumericalError):
    """Gram–Schmidt hit a numerically dependent monomial."""


class NonConvergence(NumericalError):
    """An iterative optimizer ran out of iterations."""


class TruncationError(NumericalError):
    """A truncated series left more slack than allowed."""


class ZeroDivergence(NumericalError):
    """Chi-square divergence is zero so a normalized score is undefined."""


class NonCertifiedFit(NumericalError):
    """NPMLE fit finished with its optimality gap above tolerance."""


class OrderCapExceeded(ValueError):
    """Requested polynomial or moment order is above the configured cap."""
