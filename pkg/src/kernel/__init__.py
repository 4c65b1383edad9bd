from .spec import KernelSpec, MultiIndex, multi_indices, SCHEMA_VERSION
from .components import (
    component_density,
    log_component_density,
    log_component_matrix,
)
from .polynomials import (
    orth_poly_eval,
    orth_poly_log_abs,
    poly_norm_const,
    log_poly_norm_const,
    coordinate_scales,
    normalized_recurrence,
    orthonormal_poly_table,
)

__all__ = [
    "KernelSpec",
    "MultiIndex",
    "multi_indices",
    "SCHEMA_VERSION",
    "component_density",
    "log_component_density",
    "log_component_matrix",
    "orth_poly_eval",
    "orth_poly_log_abs",
    "poly_norm_const",
    "log_poly_norm_const",
    "coordinate_scales",
    "normalized_recurrence",
    "orthonormal_poly_table",
]
