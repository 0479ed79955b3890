import math

import numpy as np
import pytest
from scipy.linalg import expm

from gitstrata.crosscheck import InstanceFamily, SL2Family
from gitstrata.crosscheck.checks import gradient_fd_error
from gitstrata.kahler import (
    BACKEND,
    NEG_INFINITY,
    FlowOptions,
    HermitianRep,
    NonConverged,
    RepresentationError,
    SU2Module,
    SU2_BASIS,
    f_value,
    flow,
    grad_f,
    group_act,
    kahler_inner,
    kempf_ness,
    moment,
    scaled,
    varpi_phi,
)
from gitstrata.kahler import _flowcore_py
from gitstrata.torus_git import RepSpec


def circle(E=(1, -1), V=()):
    return HermitianRep.from_torus(RepSpec(1, tuple(((w,), 1) for w in E), tuple(((w,), 1) for w in V)))


def pt(rep, v, m):
    return rep.point(np.asarray(v, dtype=complex), np.asarray(m, dtype=complex))


# ---------------------------------------------------------------- moment map


def test_moment_of_weight_line():
    rep = circle(E=(1,))
    assert moment(rep, pt(rep, [], [1])) == pytest.approx([-1.0])


def test_moment_of_vector_part():
    rep = circle(E=(0,), V=(1,))
    assert moment(rep, pt(rep, [math.sqrt(2)], [1])) == pytest.approx([-1.0])
    rep0 = circle(E=(0,), V=(0,))
    assert moment(rep0, pt(rep0, [3.0], [1])) == pytest.approx([0.0])


def test_moment_rejects_non_hermitian_action():
    kE = np.array([[[1.0, 0.0], [0.0, 1j]]])
    rep = HermitianRep(np.zeros((1, 0, 0)), kE, check=False)
    with pytest.raises(RepresentationError):
        moment(rep, pt(rep, [], [1, 1]))


def test_moment_equivariance_su2():
    rep = HermitianRep.from_su2(SU2Module.irrep(3), SU2Module.irrep(1))
    rng = np.random.default_rng(0)
    x = pt(rep, rng.normal(size=2) + 1j * rng.normal(size=2), rng.normal(size=4) + 1j * rng.normal(size=4))
    a = rng.normal(size=3)
    y = group_act(rep, a, x)
    # unitary action rotates the moment by the adjoint action on su(2)
    k = expm(np.einsum("k,kij->ij", a, np.array(SU2_BASIS)))
    phi, phi_y = moment(rep, x), moment(rep, y)
    X = np.einsum("k,kij->ij", phi, np.array(SU2_BASIS))
    rotated = k @ X @ k.conj().T
    coords = np.array([np.trace(B.conj().T @ rotated).real for B in SU2_BASIS]) / np.array(
        [np.trace(B.conj().T @ B).real for B in SU2_BASIS]
    )
    assert phi_y == pytest.approx(coords, abs=1e-10)


# ---------------------------------------------------------------- gradient


def test_gradient_vanishes_on_zero_level():
    rep = circle()
    x = pt(rep, [], [1, 1])
    assert f_value(rep, x) == pytest.approx(0.0, abs=1e-15)
    gv, gm = grad_f(rep, x)
    assert np.linalg.norm(gm) < 1e-15


def test_fixed_point_is_critical():
    rep = circle()
    x = pt(rep, [], [1, 0])
    assert f_value(rep, x) == pytest.approx(0.5)
    gv, gm = grad_f(rep, x)
    assert np.linalg.norm(gm) == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_gradient_matches_finite_differences(seed):
    inst = InstanceFamily(5, seed).instances()[seed]
    rep = HermitianRep.from_torus(inst.spec)
    from gitstrata.crosscheck.checks import torus_state

    _, x = torus_state(inst)
    rng = np.random.default_rng(seed)
    h = (rng.normal(size=rep.dimV) + 1j * rng.normal(size=rep.dimV),
         rng.normal(size=rep.dimE) + 1j * rng.normal(size=rep.dimE))
    err = gradient_fd_error(rep, x, h)
    assert err is None or err < 1e-6


def test_gradient_fd_on_su2():
    rep = HermitianRep.from_su2(SU2Module.irrep(3), SU2Module.irrep(2))
    rng = np.random.default_rng(7)
    x = pt(rep, rng.normal(size=3), rng.normal(size=4) + 1j * rng.normal(size=4))
    h = (rng.normal(size=3) + 0j, rng.normal(size=4) + 1j * rng.normal(size=4))
    assert gradient_fd_error(rep, x, h) < 1e-6


def test_kahler_inner_is_symmetric_and_positive():
    rep = circle(E=(1, 2, -1), V=(1,))
    x = pt(rep, [0.3], [1, 1j, 0.5])
    rng = np.random.default_rng(1)
    h1 = (rng.normal(size=1) + 0j, rng.normal(size=3) + 1j * rng.normal(size=3))
    h2 = (rng.normal(size=1) + 0j, rng.normal(size=3) + 1j * rng.normal(size=3))
    assert kahler_inner(rep, x, h1, h2) == pytest.approx(kahler_inner(rep, x, h2, h1))
    assert kahler_inner(rep, x, h1, h1) > 0


# ---------------------------------------------------------------- flow


def test_flow_from_fixed_point_stays():
    rep = circle()
    r = flow(rep, pt(rep, [], [1, 0]))
    assert r.converged
    assert r.M_estimate == pytest.approx(1.0, abs=1e-9)
    assert r.beta == pytest.approx([-1.0], abs=1e-9)


def test_flow_from_balanced_point_is_semistable():
    rep = circle()
    r = flow(rep, pt(rep, [], [1, 1]))
    assert r.semistable
    assert np.linalg.norm(r.phi_inf) < 1e-6


def test_flow_limit_of_generic_circle_point():
    rep = circle(E=(1, -1, 2))
    r = flow(rep, pt(rep, [], [1, 0.5, 0]))
    assert r.semistable
    r = flow(rep, pt(rep, [], [1, 0, 2]))
    # only positive weights: the limit is the lowest-norm weight line, moment -1
    assert r.beta == pytest.approx([-1.0], abs=1e-6)


@pytest.mark.parametrize("r", [0.5, 2.0])
def test_dilation_keeps_label(r):
    rep = circle(E=(1, -2), V=(1, -1))
    x = pt(rep, [1.0, 0.2], [1.0, 0.0])
    base, other = flow(rep, x), flow(rep, scaled(x, r))
    assert np.linalg.norm(base.beta - other.beta) < 1e-6


def test_flow_is_monotone():
    for inst in InstanceFamily(15, seed=3).instances():
        from gitstrata.crosscheck.checks import torus_state

        rep, x = torus_state(inst)
        try:
            r = flow(rep, x)
        except NonConverged as exc:
            r = exc.result
        assert r.f_increases == 0
        f = r.trajectory[:, 1]
        assert np.all(np.diff(f) <= 1e-9 * max(1.0, f[0]))


def test_beta_is_invariant_under_unitary_action():
    rng = np.random.default_rng(5)
    for inst in SL2Family(4, seed=5, kind="generic").instances():
        rep, x = inst.rep(), inst.state()
        base = flow(rep, x)
        moved = flow(rep, group_act(rep, rng.normal(size=3), x))
        assert abs(np.linalg.norm(base.beta) - np.linalg.norm(moved.beta)) < 1e-4
        assert abs(base.M_estimate - moved.M_estimate) < 1e-4


def test_companion_does_not_change_limit():
    rep = HermitianRep.from_su2(SU2Module.irrep(3))
    x = pt(rep, [], [1, 0.3, 0, 0.1j])
    a = flow(rep, x)
    b = flow(rep, x, FlowOptions(track_xi=False))
    assert np.linalg.norm(a.beta - b.beta) < 1e-6
    assert a.M_estimate == pytest.approx(b.M_estimate, abs=1e-6)


def test_nonconverged_carries_partial_result():
    rep = circle(E=(1, -1))
    with pytest.raises(NonConverged) as err:
        flow(rep, pt(rep, [], [1, 1e-3]), FlowOptions(t_max=0.5))
    res = err.value.result
    assert not res.converged
    assert res.trajectory.shape[1] == 4 and res.trajectory[-1, 0] <= 0.5 + 1e-12


# ---------------------------------------------------------------- weights and Kempf-Ness


def test_varpi_phi_cases():
    rep = circle(E=(1, -1), V=(1,))
    assert varpi_phi(rep, pt(rep, [0], [1, 0]), [1.0]) == pytest.approx(-1.0)
    assert varpi_phi(rep, pt(rep, [0], [1, 1]), [-1.0]) == pytest.approx(-1.0)
    assert varpi_phi(rep, pt(rep, [0], [0, 1]), [1.0]) == pytest.approx(1.0)
    assert varpi_phi(rep, pt(rep, [1], [0, 1]), [1.0]) == NEG_INFINITY
    with pytest.raises(ValueError):
        varpi_phi(rep, pt(rep, [0], [0, 1]), [0.0])


def test_kempf_ness_at_origin():
    rep = circle(E=(1, -1, 2), V=(1,))
    x = pt(rep, [0.5], [1, 0.5j, 0.25])
    lam = np.array([0.7])
    value, first, second = kempf_ness(rep, x, lam, 0.0)
    assert value == pytest.approx(0.0, abs=1e-14)
    assert first == pytest.approx(float(moment(rep, x) @ lam))
    h = 1e-5
    fd = (kempf_ness(rep, x, lam, h)[1] - kempf_ness(rep, x, lam, -h)[1]) / (2 * h)
    assert second == pytest.approx(fd, rel=1e-6)


def test_kempf_ness_linear_at_fixed_point():
    rep = circle()
    x = pt(rep, [], [1, 0])
    for t in (-2.0, 0.5, 3.0):
        value, first, second = kempf_ness(rep, x, [1.0], t)
        assert first == pytest.approx(-1.0)
        assert second == pytest.approx(0.0, abs=1e-12)
        assert value == pytest.approx(-t)


def test_kempf_ness_is_convex():
    rep = HermitianRep.from_su2(SU2Module.irrep(4), SU2Module.irrep(1))
    rng = np.random.default_rng(2)
    x = pt(rep, rng.normal(size=2) + 0j, rng.normal(size=5) + 1j * rng.normal(size=5))
    lam = rng.normal(size=3)
    values = [kempf_ness(rep, x, lam, t)[0] for t in np.linspace(-2, 2, 41)]
    assert np.all(np.diff(values, 2) >= -1e-10)
    assert all(kempf_ness(rep, x, lam, t)[2] >= 0 for t in (-1.0, 0.0, 1.5))
    # slope tends to the weight of lam along x as exp(i t lam) runs backwards
    assert varpi_phi(rep, x, lam) == NEG_INFINITY and kempf_ness(rep, x, lam, -40.0)[1] < -1e6
    rep_e = HermitianRep.from_su2(SU2Module.irrep(4))
    y = pt(rep_e, [], x.m)
    assert kempf_ness(rep_e, y, lam, -40.0)[1] == pytest.approx(varpi_phi(rep_e, y, lam), abs=1e-6)


# ---------------------------------------------------------------- backends


@pytest.mark.skipif(BACKEND != "cython", reason="compiled kernels not built")
@pytest.mark.parametrize("companion", [0, 1, 2])
def test_backends_agree(companion):
    from gitstrata.kahler import _flowcore

    rep = HermitianRep.from_su2(SU2Module.irrep(3), SU2Module.irrep(2))
    rng = np.random.default_rng(companion)
    x = pt(rep, rng.normal(size=3) + 1j * rng.normal(size=3), rng.normal(size=4) + 1j * rng.normal(size=4))
    parts = [x.pack()]
    if companion:
        parts.append(rng.normal(size=rep.d))
    if companion == 2:
        parts.append(np.linalg.qr(rng.normal(size=(3, 3)))[0].ravel())
    y = np.concatenate(parts)
    args = (y, rep.kV, rep.kE, rep.adm, rep.dimV, rep.dimE, rep.bounds, rep.weights, companion)
    assert np.allclose(_flowcore.flow_rhs(*args), _flowcore_py.flow_rhs(*args), atol=1e-12)
    dargs = (x.pack(), rep.kV, rep.kE, rep.dimV, rep.dimE, rep.bounds, rep.weights)
    for a, b in zip(_flowcore.flow_diagnostics(*dargs), _flowcore_py.flow_diagnostics(*dargs)):
        assert np.allclose(a, b, atol=1e-12)
    for a, b in zip(_flowcore.moment_parts(*dargs), _flowcore_py.moment_parts(*dargs)):
        assert np.allclose(a, b, atol=1e-12)
