"""Exact rational linear algebra and generator-form polyhedra."""

from .polyhedron import (
    MAX_DD_RANK,
    MAX_GENERATORS,
    DimensionError,
    EmptyInputError,
    InnerProductForm,
    RatVec,
    UnsupportedDimensionError,
    VPolyhedron,
    add,
    contains,
    dot,
    form_from_json,
    form_to_json,
    from_halfspaces,
    in_recession_cone,
    intersect,
    is_subset,
    kkt_certified,
    min_norm_point,
    minkowski_sum,
    neg,
    polyhedron_from_json,
    polyhedron_to_json,
    rational_from_json,
    rational_to_str,
    ratvec,
    recession_rays,
    scale,
    set_equal,
    sub,
    to_halfspaces,
    vec_from_json,
    vec_to_json,
    zero,
)

__all__ = [name for name in dir() if not name.startswith("_")]
