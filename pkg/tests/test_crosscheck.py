import dataclasses
import json

import numpy as np
import pytest

from gitstrata.crosscheck import (
    CheckReport,
    FlowOutcome,
    InstanceFamily,
    SL2Family,
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
    parallel_map,
    run_suite,
    sl2_flows,
    theorem_c_data,
    torus_flows,
    worker_count,
)
from gitstrata.crosscheck.checks import torus_state
from gitstrata.io import parse_instance
from gitstrata.torus_git import analyze


def reparse(failure):
    inst = parse_instance(json.dumps(failure["instance"]["file"]))
    return inst


def test_families_are_seeded():
    assert InstanceFamily(10, seed=3).instances() == InstanceFamily(10, seed=3).instances()
    assert InstanceFamily(10, seed=3).instances() != InstanceFamily(10, seed=4).instances()
    assert SL2Family(5, seed=1).instances() == SL2Family(5, seed=1).instances()
    with pytest.raises(ValueError):
        SL2Family(1, kind="other").instances()


def test_report_json_roundtrip():
    r = CheckReport("demo", instances_run=3, tolerances={"abs": 1e-3}, seed=2, details={"k": 1})
    r.fail({"name": "x"}, "bad", deviation=float("inf"))
    back = CheckReport.from_json(json.loads(json.dumps(r.to_json())))
    assert back.to_json() == r.to_json()
    assert not back.passed and back.max_deviation == float("inf")
    assert back.summary().startswith("FAIL demo")


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("GITSTRATA_THREADS", "1")
    assert worker_count() == 1
    assert parallel_map(abs, [-1, 2, -3]) == [1, 2, 3]
    for bad in ("0", "-2", "many"):
        monkeypatch.setenv("GITSTRATA_THREADS", bad)
        with pytest.raises(ValueError):
            worker_count()
    monkeypatch.delenv("GITSTRATA_THREADS")
    assert worker_count() >= 1


def test_m_equality_small():
    fam = InstanceFamily(12, seed=1).instances()
    r = check_M_equality(fam)
    assert r.passed, r.failures
    assert r.instances_run + r.skipped == 12


def test_m_equality_detects_wrong_flow():
    fam = InstanceFamily(4, seed=2).instances()
    flows = torus_flows(fam)
    bad = [FlowOutcome(dataclasses.replace(o.result, M_estimate=o.result.M_estimate + 0.5), o.error, o.elapsed)
           for o in flows]
    r = check_M_equality(fam, flows=bad)
    assert not r.passed
    again = reparse(r.failures[0])
    name = r.failures[0]["instance"]["name"]
    original = next(i for i in fam if i.name == name)
    assert analyze(again.spec, again.point(None)) == analyze(original.spec, original.point)


def test_ness_small():
    fam = InstanceFamily(40, seed=5).instances()
    assert check_ness(fam).passed
    assert check_ness_converse(fam).passed


def test_conjugacy_and_chen_sun_small():
    fam = InstanceFamily(8, seed=6).instances()
    sl2 = SL2Family(4, seed=6).instances()
    tf, sf = torus_flows(fam), sl2_flows(sl2)
    r1 = check_lambda_conjugacy(fam, sl2, tf, sf)
    r2 = check_chen_sun(fam, sl2, tf, sf)
    assert r1.passed, r1.failures
    assert r2.passed, r2.failures


def test_shifting_small():
    r = check_shifting(InstanceFamily(8, seed=7).instances(), SL2Family(3, seed=7).instances())
    assert r.passed, r.failures
    assert "too_large" in r.details


def test_theorem_c_and_convexity_small():
    data = theorem_c_data(SL2Family(2, seed=8, kind="generic").instances(), seed=8, starts=8)
    r = check_theorem_C(data)
    assert r.passed, r.failures
    assert r.details["grid_points"] > 0
    assert check_convexity_sl2(data).passed
    assert check_convexity_torus(InstanceFamily(3, seed=8, max_rank=2).instances()).passed


def test_strata_small():
    r = check_strata(InstanceFamily(4, seed=9).instances(), perturbations=10, starts_per_instance=2, seed=9)
    assert r.passed, r.failures


def test_hygiene_small():
    fam = InstanceFamily(6, seed=10).instances()
    points = [torus_state(i) for i in fam]
    r = check_hygiene(points, torus_flows(fam), seed=10)
    assert r.passed, r.failures


def test_run_suite_reproducible_and_names():
    a = [x.to_json() for x in run_suite("ness", seed=3, count=15)]
    b = [x.to_json() for x in run_suite("ness", seed=3, count=15)]
    assert a == b
    with pytest.raises(ValueError):
        run_suite("nope")


def test_flow_outcomes_record_time():
    fam = InstanceFamily(3, seed=11).instances()
    for o in torus_flows(fam):
        assert o.elapsed >= 0 and (o.result is not None or o.error is not None)
        if o.result is not None:
            assert np.isfinite(o.result.M_estimate)
