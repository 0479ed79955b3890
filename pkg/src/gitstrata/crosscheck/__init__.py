"""Randomized cross-validation of the exact and numerical layers."""

from .checks import (
    BxData,
    bx_data,
    FlowOutcome,
    check_chen_sun,
    check_convexity_sl2,
    check_convexity_torus,
    check_hygiene,
    check_lambda_conjugacy,
    check_M_equality,
    check_ness,
    check_ness_converse,
    check_shifting,
    check_strata,
    check_theorem_C,
    run_flow,
    sl2_flows,
    theorem_c_data,
    torus_flows,
)
from .families import InstanceFamily, SL2Family, SL2Instance, TorusInstance, random_form
from .report import CheckReport, parallel_map, worker_count
from .suites import SUITES, run_suite

__all__ = [name for name in dir() if not name.startswith("_")]
