from .logger import setup_logger
from .helpers import (
    compensated_sum,
    log_factorial,
    derive_seed,
    make_rng,
    format_number,
    format_vector,
    sorted_unique_rows,
)
from .errors import (
    NumericalError,
    QuadratureNonConvergence,
    SupportMismatch,
    SingularGramError,
    NonConvergence,
    TruncationError,
    ZeroDivergence,
    NonCertifiedFit,
    OrderCapExceeded,
)

__all__ = [
    "setup_logger",
    "compensated_sum",
    "log_factorial",
    "derive_seed",
    "make_rng",
    "format_number",
    "format_vector",
    "sorted_unique_rows",
    "NumericalError",
    "QuadratureNonConvergence",
    "SupportMismatch",
    "SingularGramError",
    "NonConvergence",
    "TruncationError",
    "ZeroDivergence",
    "NonCertifiedFit",
    "OrderCapExceeded",
]
