"""Numerical layer: Hermitian representations, the moment map and its gradient flow."""

from ._kernels import BACKEND
from .flow import (
    NEG_INFINITY,
    FlowOptions,
    FlowResult,
    NonConverged,
    NumericalError,
    f_value,
    flow,
    grad_f,
    group_act,
    horizontal,
    kahler_inner,
    kempf_ness,
    moment,
    scaled,
    semistable_flow,
    varpi_phi,
)
from .modules import SU2_BASIS, SU2Module
from .rep import Block, HermitianRep, RepresentationError, StatePoint

__all__ = [
    "BACKEND",
    "Block",
    "FlowOptions",
    "FlowResult",
    "HermitianRep",
    "NEG_INFINITY",
    "NonConverged",
    "NumericalError",
    "RepresentationError",
    "SU2Module",
    "SU2_BASIS",
    "StatePoint",
    "f_value",
    "flow",
    "grad_f",
    "group_act",
    "horizontal",
    "kahler_inner",
    "kempf_ness",
    "moment",
    "scaled",
    "semistable_flow",
    "varpi_phi",
]
