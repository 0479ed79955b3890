import json
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gitstrata.group_git import GroupSpec, P_U_sampled, UnipotentSampler, torus_spec
from gitstrata.io import (
    FORMAT_VERSION,
    TRAJECTORY_COLUMNS,
    SchemaError,
    complex_from_json,
    complex_to_json,
    cvec_from_json,
    cvec_to_json,
    flow_result_from_json,
    flow_result_to_json,
    groupspec_from_json,
    groupspec_to_json,
    hermitian_from_json,
    hermitian_to_json,
    parse_instance,
    read_trajectory_csv,
    repspec_from_json,
    repspec_to_json,
    sampled_from_json,
    sampled_to_json,
    state_from_json,
    state_to_json,
    stratum_from_json,
    stratum_to_json,
    torus_point_from_json,
    torus_point_to_json,
    verdict_from_json,
    verdict_to_json,
    write_trajectory_csv,
)
from gitstrata.kahler import HermitianRep, SU2Module, flow
from gitstrata.ratgeom import InnerProductForm
from gitstrata.torus_git import RepSpec, TorusPoint, analyze, enumerate_strata

from gitstrata.crosscheck import InstanceFamily


def roundtrip(obj, to, frm):
    data = to(obj)
    again = json.loads(json.dumps(data))
    return frm(again), data


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=100)
@given(finite, finite)
def test_complex_roundtrip(re, im):
    z = complex(re, im)
    assert complex_from_json(json.loads(json.dumps(complex_to_json(z)))) == z


def test_cvec_roundtrip_empty_and_values():
    for v in (np.zeros(0, complex), np.array([1 + 2j, -0.5, 3e-300j])):
        back = cvec_from_json(json.loads(json.dumps(cvec_to_json(v))))
        assert back.shape == v.shape and np.array_equal(back, v)


def test_repspec_and_point_roundtrip():
    for inst in InstanceFamily(30, seed=4).instances():
        spec, data = roundtrip(inst.spec, repspec_to_json, repspec_from_json)
        assert spec == inst.spec
        assert repspec_to_json(spec) == data
        x, _ = roundtrip(inst.point, torus_point_to_json, torus_point_from_json)
        assert x == inst.point


def test_verdict_and_stratum_roundtrip():
    for inst in InstanceFamily(20, seed=5).instances():
        v, data = roundtrip(analyze(inst.spec, inst.point), verdict_to_json, verdict_from_json)
        assert v == analyze(inst.spec, inst.point)
        if inst.spec.dimE + inst.spec.dimV <= 8:
            for s in enumerate_strata(inst.spec):
                assert roundtrip(s, stratum_to_json, stratum_from_json)[0] == s


def test_rationals_are_strings():
    spec = RepSpec(1, (((1,), 1),), (), InnerProductForm(((F(2),),)))
    data = verdict_to_json(analyze(spec, TorusPoint((1,))))
    assert data == {"status": "Unstable", "Msq": "1/2", "tau_x": ["-1/2"]}


def test_groupspec_roundtrip():
    for g in (GroupSpec.sl2(), GroupSpec.torus(2), GroupSpec.product(GroupSpec.sl2(), GroupSpec.torus(1))):
        back, _ = roundtrip(g, groupspec_to_json, groupspec_from_json)
        assert back == g


def test_hermitian_and_state_roundtrip():
    rep = HermitianRep.from_su2(SU2Module.from_irreps((2, 1)), SU2Module.from_irreps((1,)))
    back, _ = roundtrip(rep, hermitian_to_json, hermitian_from_json)
    assert np.array_equal(back.kE, rep.kE) and np.array_equal(back.kV, rep.kV)
    assert back.blocks == rep.blocks and back.factor_sizes == rep.factor_sizes
    x = rep.point(np.array([1j, 2]), np.array([0.1, 0.2j, 0.3, 1, -1]))
    y, _ = roundtrip(x, state_to_json, state_from_json)
    assert np.array_equal(y.v, x.v) and np.array_equal(y.m, x.m)


def test_flow_result_roundtrip():
    rep = HermitianRep.from_torus(RepSpec(1, (((1,), 1), ((-1,), 1))))
    r = flow(rep, rep.point(np.zeros(0), np.array([1, 0.5j])))
    back, data = roundtrip(r, flow_result_to_json, flow_result_from_json)
    assert flow_result_to_json(back) == data


def test_sampled_roundtrip():
    rep = HermitianRep.from_su2(SU2Module.irrep(2))
    x = rep.point(np.zeros(0), np.array([0, 1, 0.5], dtype=complex))
    s = P_U_sampled(torus_spec(rep), x, UnipotentSampler.for_rep(rep))
    back, data = roundtrip(s, sampled_to_json, sampled_from_json)
    assert sampled_to_json(back) == data


def test_trajectory_csv_columns(tmp_path):
    traj = np.array([[0.0, 1.5, 2.0, 0.25], [0.5, 1.25, 1.5, 1e-9]])
    path = tmp_path / "t.csv"
    write_trajectory_csv(path, traj)
    assert path.read_text().splitlines()[0] == ",".join(TRAJECTORY_COLUMNS) == "t,f,phi_norm,grad_norm"
    assert np.array_equal(read_trajectory_csv(path), traj)


# ---------------------------------------------------------------- instance files

GOOD = """{
  "version": "gitstrata/1",
  "rep": {"rank": 1, "weightsE": [[1], {"weight": [-1], "mult": 2}]},
  "points": {"x": {"E": [[1, 0], [0, 0], [0.5, 0.5]]}}
}"""


def test_parse_good_instance():
    inst = parse_instance(GOOD)
    assert inst.spec.dimE == 3
    assert inst.point("x").coeffsE == (1, 0, 0.5 + 0.5j)
    assert inst.point(None) == inst.point("x")
    again = parse_instance(json.dumps(inst.to_json()))
    assert again.spec == inst.spec and again.points == inst.points


def test_syntax_error_has_line_and_column():
    text = GOOD.replace('"points": {', '"points" {')
    with pytest.raises(SchemaError) as err:
        parse_instance(text)
    assert (err.value.line, err.value.column) == (4, 12)


def test_schema_error_located_at_offending_value():
    text = GOOD.replace('"rank": 1', '"rank": "one"')
    with pytest.raises(SchemaError) as err:
        parse_instance(text)
    assert err.value.line == 3
    assert text.splitlines()[2][err.value.column - 1:].startswith('"one"')


def test_wrong_point_size_located():
    text = GOOD.replace("[0.5, 0.5]]", "[0.5, 0.5], [1, 1]]")
    with pytest.raises(SchemaError) as err:
        parse_instance(text)
    assert err.value.line == 4 and "expected 3" in str(err.value)


def test_missing_version_and_unknown_point():
    with pytest.raises(SchemaError):
        parse_instance(GOOD.replace(f'"version": "{FORMAT_VERSION}"', '"version": "other"'))
    with pytest.raises(SchemaError):
        parse_instance(GOOD).point("nope")


def test_zero_m_rejected():
    with pytest.raises(SchemaError):
        parse_instance(GOOD.replace("[[1, 0], [0, 0], [0.5, 0.5]]", "[[0, 0], [0, 0], [0, 0]]"))


def test_hermitian_su2_shorthand_and_mismatch():
    text = """{"version": "gitstrata/1", "hermitian": {"su2": {"E": [2]}},
      "points": {"x": {"E": [[1, 0], [0, 0], [1, 0]]}}}"""
    inst = parse_instance(text)
    assert [w[0] for w in inst.spec.slotsE] == [2, 0, -2]
    assert inst.groupspec() == GroupSpec.sl2()
    bad = text.replace('"hermitian"', '"rep": {"rank": 1, "weightsE": [[2], [1], [-2]]}, "hermitian"')
    with pytest.raises(SchemaError) as err:
        parse_instance(bad)
    assert "slot 1" in str(err.value)


def test_group_action_block():
    text = """{"version": "gitstrata/1",
      "rep": {"rank": 1, "weightsE": [[1], [-1]]},
      "group": {"rank": 1, "positive_roots": [[2]], "weyl": [[[1]], [[-1]]],
                "action": {"E": [[[[0, 0], [1, 0]], [[0, 0], [0, 0]]]]}},
      "points": {"x": {"E": [[0, 0], [1, 0]]}}}"""
    inst = parse_instance(text)
    sampler = inst.sampler()
    assert sampler.dim == 1 and np.allclose(sampler.gens_E[0], [[0, 1], [0, 0]])
    again = parse_instance(json.dumps(inst.to_json()))
    assert np.allclose(again.sampler().gens_E[0], sampler.gens_E[0])
    with pytest.raises(SchemaError):
        parse_instance(text.replace("[[[[0, 0], [1, 0]], [[0, 0], [0, 0]]]]", "[[[[1, 0], [0, 0]], [[0, 0], [1, 0]]]]"))
