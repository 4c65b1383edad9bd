from .solver import (
    SolverConfig,
    Certificate,
    VertexExchangeSolver,
    solve,
    optimality_gap,
    directional_derivatives,
    default_probe_grid,
)
from .likelihood import GnMembership, lrt, in_Gn
from .submodel import SubmodelFit, solve_submodel, attach_gram

__all__ = [
    "SolverConfig",
    "Certificate",
    "VertexExchangeSolver",
    "solve",
    "optimality_gap",
    "directional_derivatives",
    "default_probe_grid",
    "GnMembership",
    "lrt",
    "in_Gn",
    "SubmodelFit",
    "solve_submodel",
    "attach_gram",
]
