"""Named check suites with the default family sizes used by the CLI."""

from __future__ import annotations

from typing import Callable

from .checks import (
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
    sl2_flows,
    theorem_c_data,
    torus_flows,
    torus_state,
)
from .families import InstanceFamily, SL2Family
from .report import CheckReport


def _n(count, default):
    return default if count is None else count


def suite_m_equality(seed: int, count: int | None = None) -> list[CheckReport]:
    fam = InstanceFamily(_n(count, 100), seed).instances()
    return [check_M_equality(fam)]


def suite_ness(seed: int, count: int | None = None) -> list[CheckReport]:
    return [check_ness(InstanceFamily(_n(count, 500), seed).instances())]


def suite_ness_converse(seed: int, count: int | None = None) -> list[CheckReport]:
    return [check_ness_converse(InstanceFamily(_n(count, 500), seed).instances())]


def _conjugacy_inputs(seed, count):
    fam = InstanceFamily(_n(count, 100), seed).instances()
    sl2 = SL2Family(20, seed).instances()
    return fam, sl2, torus_flows(fam), sl2_flows(sl2)


def suite_conjugacy(seed: int, count: int | None = None) -> list[CheckReport]:
    fam, sl2, tf, sf = _conjugacy_inputs(seed, count)
    return [check_lambda_conjugacy(fam, sl2, tf, sf)]


def suite_chen_sun(seed: int, count: int | None = None) -> list[CheckReport]:
    fam, sl2, tf, sf = _conjugacy_inputs(seed, count)
    return [check_chen_sun(fam, sl2, tf, sf)]


def suite_shifting(seed: int, count: int | None = None) -> list[CheckReport]:
    fam = InstanceFamily(_n(count, 60), seed).instances()
    return [check_shifting(fam, SL2Family(20, seed).instances())]


def suite_theorem_c(seed: int, count: int | None = None) -> list[CheckReport]:
    data = theorem_c_data(SL2Family(_n(count, 10), seed, kind="generic").instances(), seed=seed)
    return [check_theorem_C(data)]


def suite_convexity(seed: int, count: int | None = None) -> list[CheckReport]:
    data = theorem_c_data(SL2Family(_n(count, 10), seed, kind="generic").instances(), seed=seed)
    torus = InstanceFamily(_n(count, 10), seed, max_rank=2).instances()
    return [check_convexity_sl2(data), check_convexity_torus(torus)]


def suite_strata(seed: int, count: int | None = None) -> list[CheckReport]:
    return [check_strata(InstanceFamily(_n(count, 40), seed).instances(), seed=seed)]


def suite_hygiene(seed: int, count: int | None = None) -> list[CheckReport]:
    n = _n(count, 50)
    fam = InstanceFamily(n - n // 2, seed).instances()
    sl2 = SL2Family(n // 2, seed, kind="generic").instances()
    points = [torus_state(inst) for inst in fam] + [(inst.rep(), inst.state()) for inst in sl2]
    return [check_hygiene(points, torus_flows(fam) + sl2_flows(sl2), seed=seed)]


SUITES: dict[str, Callable[..., list[CheckReport]]] = {
    "M-equality": suite_m_equality,
    "ness": suite_ness,
    "ness-converse": suite_ness_converse,
    "conjugacy": suite_conjugacy,
    "chen-sun": suite_chen_sun,
    "shifting": suite_shifting,
    "theorem-C": suite_theorem_c,
    "convexity": suite_convexity,
    "strata": suite_strata,
    "hygiene": suite_hygiene,
}


def run_suite(name: str, seed: int = 0, count: int | None = None) -> list[CheckReport]:
    """Run one named suite, or every suite for "all"."""
    if name == "all":
        return [r for fn in SUITES.values() for r in fn(seed, count)]
    try:
        fn = SUITES[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join([*SUITES, 'all'])}") from None
    return fn(seed, count)
