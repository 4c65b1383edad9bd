from .distribution import (
    DiscreteMixing,
    UniformBox,
    MixingDescriptor,
    mixing_from_dict,
    as_discrete,
)
from .moments import (
    moment,
    moment_table,
    MomentTable,
    moment_gap,
    MomentGap,
    symmetric_spectral_norm,
    tensor_norms,
    moment_comparison_bound,
    log_moment_comparison_factor,
)
from .sampling import sample, draw_parameters
from .basis import OrthoBasis, orthonormal_basis

__all__ = [
    "DiscreteMixing",
    "UniformBox",
    "MixingDescriptor",
    "mixing_from_dict",
    "as_discrete",
    "moment",
    "moment_table",
    "MomentTable",
    "moment_gap",
    "MomentGap",
    "symmetric_spectral_norm",
    "tensor_norms",
    "moment_comparison_bound",
    "log_moment_comparison_factor",
    "sample",
    "draw_parameters",
    "OrthoBasis",
    "orthonormal_basis",
]
