from fractions import Fraction as F

import pytest

from gitstrata.crosscheck import InstanceFamily
from gitstrata.ratgeom import InnerProductForm, VPolyhedron, set_equal
from gitstrata.torus_git import (
    NEG_INFINITY,
    SEMISTABLE,
    InvalidDirectionError,
    InvalidPointError,
    RepSpec,
    Status,
    TorusPoint,
    analyze,
    enumerate_strata,
    exposed_face,
    limit,
    moment_polyhedron_T,
    point_with_support,
    stratum_label,
    support_E,
    support_V,
    varpi_E,
    varpi_rel,
    varpi_rel_normalized,
    weight_polyhedron,
)

from oracles import facewise_min_norm, hilbert_mumford, inverse_gram


def rep(e, v=(), form=None):
    r = len(e[0])
    return RepSpec(r, tuple((w, 1) for w in e), tuple((w, 1) for w in v), form)


def pt(spec, e, v=()):
    """Point with coefficient 1 on every listed E / V slot index."""
    return TorusPoint.sparse(spec, {i: 1 for i in e}, {i: 1 for i in v})


def vec(*xs):
    return tuple(F(x) for x in xs)


# ---------------------------------------------------------------- spec basics


def test_rep_validation():
    with pytest.raises(ValueError):
        RepSpec(1, ())
    with pytest.raises(ValueError):
        RepSpec(2, (((1,), 1),))
    with pytest.raises(ValueError):
        RepSpec(1, (((1,), 0),))


def test_point_validation():
    s = rep([(1,), (-1,)])
    with pytest.raises(InvalidPointError):
        weight_polyhedron(s, TorusPoint((0, 0)))
    with pytest.raises(InvalidPointError):
        weight_polyhedron(s, TorusPoint((1,)))


def test_multiplicities_expand_slots():
    s = RepSpec(1, (((1,), 2), ((-1,), 1)))
    assert s.dimE == 3
    x = TorusPoint((0, 1, 0))
    assert support_E(s, x) == (vec(1),)


# ---------------------------------------------------------------- weight polyhedra


def test_weight_polyhedron_examples():
    s = rep([(1,), (-1,)], [(-1,)])
    assert set_equal(weight_polyhedron(s, pt(s, [0, 1])), VPolyhedron(1, [vec(1), vec(-1)]))
    assert set_equal(weight_polyhedron(s, pt(s, [0], [0])), VPolyhedron(1, [vec(1)], [vec(-1)]))
    s2 = rep([(2, 0), (0, 2)], [(1, 1)])
    got = weight_polyhedron(s2, pt(s2, [0, 1], [0]))
    assert got.points == (vec(2, 0), vec(0, 2)) and got.rays == (vec(1, 1),)


def test_moment_polyhedron_negates():
    s = rep([(1,), (-1,)], [(-1,)])
    assert set_equal(moment_polyhedron_T(s, pt(s, [0, 1])), VPolyhedron(1, [vec(-1), vec(1)]))
    assert set_equal(moment_polyhedron_T(s, pt(s, [0], [0])), VPolyhedron(1, [vec(-1)], [vec(1)]))
    s2 = rep([(2, 0)], [(0, 1)])
    got = moment_polyhedron_T(s2, pt(s2, [0], [0]))
    assert got.points == (vec(-2, 0),) and got.rays == (vec(0, -1),)


# ---------------------------------------------------------------- degrees


def test_varpi_E_examples():
    s = rep([(1,), (-1,)])
    assert varpi_E(s, pt(s, [0, 1]), (2,)) == -2
    assert varpi_E(s, pt(s, [0]), (-1,)) == 1
    s2 = rep([(1, 0), (0, 1)])
    assert varpi_E(s2, pt(s2, [0, 1]), (1, 1)) == -1


def test_varpi_rel_examples():
    s = rep([(1,)], [(1,)])
    x = pt(s, [0], [0])
    assert varpi_rel(s, x, (-1,)) == varpi_E(s, x, (-1,)) == 1
    assert varpi_rel(s, x, (1,)) == NEG_INFINITY
    s0 = rep([(1,)])
    assert varpi_rel(s0, pt(s0, [0]), (3,)) == -3
    assert varpi_rel_normalized(s0, pt(s0, [0]), (-3,)) == (3, 9)
    with pytest.raises(InvalidDirectionError):
        varpi_rel(s0, pt(s0, [0]), (0,))


# ---------------------------------------------------------------- analyze


def test_analyze_examples():
    s = rep([(1,), (-1,)])
    assert analyze(s, pt(s, [0, 1])).status is Status.SEMISTABLE
    v = analyze(s, pt(s, [0]))
    assert (v.status, v.Msq, v.tau_x) == (Status.UNSTABLE, 1, vec(-1))
    s2 = rep([(1,)], [(-1,), (1,)])
    assert analyze(s2, pt(s2, [0], [0])).status is Status.SEMISTABLE
    assert analyze(s2, pt(s2, [0], [0, 1])).status is Status.VSTABLE


def test_analyze_examples_against_grid_oracle():
    # rank 1, E {+1}: sup of normalized degree over a grid is attained at tau = -1.
    assert hilbert_mumford([vec(1)], [], [[1]])[1:] == (True, 1, vec(-1))
    assert hilbert_mumford([vec(1)], [vec(-1)], [[1]])[:2] == (False, False)


def test_analyze_nonidentity_form():
    form = InnerProductForm(((2, 0), (0, 1)))
    s = rep([(2, 0)], form=form)
    v = analyze(s, pt(s, [0]))
    # Dual pairing of (2,0) with itself is 4/2 = 2; tau = -G^{-1}(2,0) = (-1, 0).
    assert v.Msq == 2 and v.tau_x == vec(-1, 0)
    assert form.sq(v.tau_x) == v.Msq


def test_limit_examples():
    s = rep([(1,), (-1,)])
    x = TorusPoint((2 + 1j, -3))
    y = limit(s, x, (-1,))
    assert y.coeffsE == (0, -3)
    sf = rep([(0,)], [(0,)])
    xf = pt(sf, [0], [0])
    assert limit(sf, xf, (1,)) == xf
    sv = rep([(0,)], [(1,)])
    assert limit(sv, pt(sv, [0], [0]), (1,)) is None


def test_stratum_label_examples():
    s = rep([(1,), (-1,)])
    assert stratum_label(s, pt(s, [0, 1])) is SEMISTABLE
    assert stratum_label(s, pt(s, [0])) == vec(-1)
    s2 = rep([(1,)], [(-1,)])
    assert stratum_label(s2, pt(s2, [0], [0])) is SEMISTABLE


def test_enumerate_strata_examples():
    labels = {st.label for st in enumerate_strata(rep([(1,), (-1,)]))}
    assert labels == {SEMISTABLE, vec(-1), vec(1)}
    only = enumerate_strata(rep([(1,)]))
    assert [st.label for st in only] == [vec(-1)]
    two = enumerate_strata(rep([(2,)]))
    assert (two[0].label, two[0].Msq) == (vec(-2), 4)


def test_enumerate_strata_witnesses_realize_their_labels():
    fam = InstanceFamily(count=25, seed=7, max_rank=2, max_E=4, max_V=2)
    for inst in fam.instances():
        for st in enumerate_strata(inst.spec):
            x = point_with_support(inst.spec, st.support_E, st.support_V)
            assert stratum_label(inst.spec, x) == st.label


def test_enumerate_strata_cap():
    s = RepSpec(1, tuple(((k,), 1) for k in range(-6, 7)))
    with pytest.raises(ValueError):
        enumerate_strata(s)


# ---------------------------------------------------------------- oracle properties


def _family(count=150, seed=1, **kw):
    return InstanceFamily(count=count, seed=seed, **kw).instances()


def test_hilbert_mumford_consistency_rank_le_2():
    for inst in _family(150, seed=2, max_rank=2):
        s, x = inst.spec, inst.point
        v = analyze(s, x)
        grid_u, cand_u, msq, tau = hilbert_mumford(support_E(s, x), support_V(s, x), s.form.gram)
        assert (v.status is Status.UNSTABLE) == cand_u
        assert grid_u <= cand_u
        if cand_u:
            assert (v.Msq, v.tau_x) == (msq, tau)
            assert varpi_rel(s, x, v.tau_x) == v.Msq


def test_min_norm_agrees_with_facewise_oracle():
    for inst in _family(80, seed=3):
        s, x = inst.spec, inst.point
        v = analyze(s, x)
        if v.status is not Status.UNSTABLE:
            continue
        p = weight_polyhedron(s, x)
        y, d = facewise_min_norm(p.points, p.rays, inverse_gram(s.form.gram))
        assert v.Msq == d
        assert v.tau_x == tuple(-c for c in s.form.sharp(y))


def test_ness_push_and_face_property():
    for inst in _family(120, seed=4):
        s, x = inst.spec, inst.point
        v = analyze(s, x)
        if v.status is not Status.UNSTABLE:
            continue
        xl = limit(s, x, v.tau_x)
        assert xl is not None
        vl = analyze(s, xl)
        assert (vl.status, vl.Msq, vl.tau_x) == (v.status, v.Msq, v.tau_x)
        fe, fv = exposed_face(s, weight_polyhedron(s, x), v.tau_x)
        assert set_equal(weight_polyhedron(s, xl), VPolyhedron(s.rank, fe, fv))


def test_ness_converse_on_candidate_directions():
    from oracles import support_subset_candidates

    checked = 0
    for inst in _family(80, seed=5, max_rank=2):
        s, x = inst.spec, inst.point
        for tau in support_subset_candidates(support_E(s, x), support_V(s, x), s.form.gram):
            deg = varpi_rel(s, x, tau)
            if deg == NEG_INFINITY or deg <= 0:
                continue
            xl = limit(s, x, tau)
            vl = analyze(s, xl)
            c = deg / s.form.sq(tau)
            scaled = tuple(c * t for t in tau)
            if vl.status is Status.UNSTABLE and vl.tau_x == scaled:
                v = analyze(s, x)
                assert (v.Msq, v.tau_x) == (s.form.sq(scaled), scaled)
                checked += 1
    assert checked > 20


def test_fixed_point_push_is_identity():
    s = rep([(1,), (2,)])
    x = pt(s, [0])
    v = analyze(s, x)
    assert limit(s, x, v.tau_x) == x


def test_closure_ordering_on_patterns():
    for inst in _family(40, seed=6, max_rank=2, max_E=4, max_V=2):
        s = inst.spec
        for st in enumerate_strata(s):
            if st.label is SEMISTABLE:
                continue
            base = set(st.support_E)
            for w, _ in s.weightsE:
                if w in base:
                    continue
                bigger = analyze(s, point_with_support(s, base | {w}, st.support_V))
                if bigger.status is Status.UNSTABLE:
                    assert bigger.Msq <= st.Msq
            for w in base:
                if len(base) == 1:
                    continue
                smaller = analyze(s, point_with_support(s, base - {w}, st.support_V))
                assert smaller.status is Status.UNSTABLE and smaller.Msq >= st.Msq


def test_scaling_invariance():
    for inst in _family(60, seed=8):
        s, x = inst.spec, inst.point
        y = TorusPoint(tuple(c * (2 - 3j) for c in x.coeffsE), tuple(c * 0.25j for c in x.coeffsV))
        assert analyze(s, x) == analyze(s, y)
