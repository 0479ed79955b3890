"""Checks binding the exact torus layer, the SL2 bookkeeping and the flow."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from functools import partial
from typing import Sequence

import numpy as np
from scipy.linalg import expm
from scipy.optimize import least_squares

from ..group_git import (
    GroupSpec,
    P_U_sampled,
    UnipotentSampler,
    moment_polyhedron_Bx,
    raising_generators,
    shift_point,
    shift_rep,
    shifted_by_direction,
    shifted_system,
    tau_flat,
    torus_spec,
)
from ..kahler import (
    FlowOptions,
    FlowResult,
    HermitianRep,
    NonConverged,
    NumericalError,
    SU2_BASIS,
    StatePoint,
    f_value,
    flow,
    grad_f,
    horizontal,
    kahler_inner,
    kempf_ness,
    moment,
)
from ..ratgeom import VPolyhedron, contains, neg, recession_rays, set_equal
from ..torus_git import (
    NEG_INFINITY,
    SEMISTABLE,
    Status,
    TorusPoint,
    analyze,
    enumerate_strata,
    exposed_face,
    limit,
    point_with_support,
    support_V,
    varpi_rel,
    weight_polyhedron,
)
from .families import SL2Instance, TorusInstance
from .report import CheckReport, parallel_map, sl2_payload, torus_payload

FLOW_VS_EXACT_TOL = 1e-3
SEMISTABLE_TOL = 1e-6
BOUNDARY_MARGIN = 1e-2
MAX_FLOW_SECONDS = 10.0
MAX_SHIFT_SLOTS = 2_000
CRITICAL_GRAD = 1e-8


# ---------------------------------------------------------------- flows


@dataclass
class FlowOutcome:
    result: FlowResult | None
    error: str | None
    elapsed: float

    @property
    def ok(self) -> bool:
        return self.result is not None


def run_flow(rep: HermitianRep, x: StatePoint, opts: FlowOptions | None = None) -> FlowOutcome:
    start = time.perf_counter()
    try:
        res = flow(rep, x, opts)
        return FlowOutcome(res, None, time.perf_counter() - start)
    except NonConverged as exc:
        return FlowOutcome(exc.result, str(exc), time.perf_counter() - start)
    except NumericalError as exc:
        return FlowOutcome(None, str(exc), time.perf_counter() - start)


def torus_state(inst: TorusInstance) -> tuple[HermitianRep, StatePoint]:
    return HermitianRep.from_torus(inst.spec), StatePoint.from_torus_point(inst.point)


def _torus_flow(inst: TorusInstance, opts=None) -> FlowOutcome:
    return run_flow(*torus_state(inst), opts)


def _sl2_flow(inst: SL2Instance, opts=None) -> FlowOutcome:
    return run_flow(inst.rep(), inst.state(), opts)


def torus_flows(instances: Sequence[TorusInstance], opts=None) -> list[FlowOutcome]:
    return parallel_map(partial(_torus_flow, opts=opts), instances)


def sl2_flows(instances: Sequence[SL2Instance], opts=None) -> list[FlowOutcome]:
    return parallel_map(partial(_sl2_flow, opts=opts), instances)


def spectrum(rep: HermitianRep, xi) -> np.ndarray:
    """Sorted eigenvalues of -i times the action of xi on E, then on V."""
    av, ae = rep.action(np.asarray(xi, dtype=float))
    parts = [np.linalg.eigvalsh(-1j * ae)]
    if rep.dimV:
        parts.append(np.linalg.eigvalsh(-1j * av))
    return np.concatenate(parts)


def _flow_failure(report, payload, out: FlowOutcome, opts: FlowOptions) -> bool:
    """Record non-convergence, slow flows and large final gradients; True if recorded."""
    if out.result is None or out.error is not None:
        report.fail(payload, f"flow failed: {out.error}")
        return True
    if out.result.grad_norm_final > opts.tol_grad:
        report.fail(payload, f"final gradient {out.result.grad_norm_final:.2e} above {opts.tol_grad:.0e}")
        return True
    return False


# ---------------------------------------------------------------- torus layer vs flow


def check_M_equality(
    instances: Sequence[TorusInstance],
    flows: Sequence[FlowOutcome] | None = None,
    opts: FlowOptions | None = None,
    tol: float = FLOW_VS_EXACT_TOL,
    time_limit: float = MAX_FLOW_SECONDS,
) -> CheckReport:
    """sqrt(Msq) from the exact layer against the flow's |moment(x_inf)|."""
    opts = opts or FlowOptions()
    flows = flows if flows is not None else torus_flows(instances, opts)
    rep = CheckReport("M-equality", tolerances={"M": tol, "tol_grad": opts.tol_grad, "seconds": time_limit})
    times, grads = [], []
    for inst, out in zip(instances, flows):
        rep.instances_run += 1
        payload = torus_payload(inst)
        if _flow_failure(rep, payload, out, opts):
            continue
        times.append(out.elapsed)
        grads.append(out.result.grad_norm_final)
        verdict = analyze(inst.spec, inst.point)
        exact = math.sqrt(verdict.Msq) if verdict.status is Status.UNSTABLE else 0.0
        dev = abs(out.result.M_estimate - exact)
        rep.observe(dev)
        flow_unstable = out.result.M_estimate > opts.ss_tol
        if flow_unstable != (verdict.status is Status.UNSTABLE):
            rep.fail(payload, f"verdicts differ: exact {verdict.status.value}, flow M={out.result.M_estimate:.3e}", dev)
        elif dev > tol:
            rep.fail(payload, f"|M_estimate - sqrt(Msq)| = {dev:.3e}", dev)
        elif out.elapsed > time_limit:
            rep.fail(payload, f"flow took {out.elapsed:.1f}s")
    rep.details = {"max_seconds": max(times, default=0.0), "max_grad": max(grads, default=0.0)}
    return rep


def check_ness(instances: Sequence[TorusInstance]) -> CheckReport:
    """Pushing an unstable point to its limit along tau_x keeps (Msq, tau_x); the limit's
    weight polyhedron is the face of P_T(x) exposed by tau_x."""
    rep = CheckReport("ness", tolerances={"exact": 0.0})
    for inst in instances:
        s, x = inst.spec, inst.point
        v = analyze(s, x)
        if v.status is not Status.UNSTABLE:
            rep.skipped += 1
            continue
        rep.instances_run += 1
        payload = torus_payload(inst)
        xl = limit(s, x, v.tau_x)
        if xl is None:
            rep.fail(payload, "limit along tau_x does not exist")
            continue
        vl = analyze(s, xl)
        if (vl.status, vl.Msq, vl.tau_x) != (v.status, v.Msq, v.tau_x):
            rep.fail(payload, f"limit has optimal data {vl}, point has {v}")
            continue
        fe, fv = exposed_face(s, weight_polyhedron(s, x), v.tau_x)
        if not set_equal(weight_polyhedron(s, xl), VPolyhedron(s.rank, fe, fv)):
            rep.fail(payload, "weight polyhedron of the limit is not the exposed face")
    return rep


def _candidate_directions(inst: TorusInstance) -> list:
    try:
        labels = [st.label for st in enumerate_strata(inst.spec) if st.label is not SEMISTABLE]
    except ValueError:
        labels = []
    v = analyze(inst.spec, inst.point)
    if v.status is Status.UNSTABLE and v.tau_x not in labels:
        labels.append(v.tau_x)
    return labels


def check_ness_converse(instances: Sequence[TorusInstance]) -> CheckReport:
    """If tau destabilizes x and is optimal for lim tau(t)x, it is optimal for x."""
    rep = CheckReport("ness-converse", tolerances={"exact": 0.0})
    for inst in instances:
        s, x = inst.spec, inst.point
        used = False
        for tau in _candidate_directions(inst):
            deg = varpi_rel(s, x, tau)
            if deg == NEG_INFINITY or deg <= 0:
                continue
            c = deg / s.form.sq(tau)
            tau = tuple(c * t for t in tau)
            vl = analyze(s, limit(s, x, tau))
            if vl.status is not Status.UNSTABLE or vl.tau_x != tau:
                continue
            used = True
            v = analyze(s, x)
            if v.status is not Status.UNSTABLE or (v.Msq, v.tau_x) != (s.form.sq(tau), tau):
                rep.fail(torus_payload(inst, tau=[str(t) for t in tau]), f"converse fails: analyze gives {v}")
        rep.instances_run += int(used)
        rep.skipped += int(not used)
    return rep


# ---------------------------------------------------------------- optimal vectors and xi


def _su2_rotate(xi3, rotation) -> np.ndarray:
    k = expm(np.tensordot(np.asarray(rotation, dtype=float), np.array(SU2_BASIS), axes=1))
    m = k @ np.tensordot(np.asarray(xi3, dtype=float), np.array(SU2_BASIS), axes=1) @ k.conj().T
    return np.array([(np.trace(b @ m) / -2.0).real for b in SU2_BASIS])


def sl2_exact_direction(inst: SL2Instance) -> tuple[Fraction, np.ndarray]:
    """(Msq, xi) for a rotated critical instance: torus data of the base point, rotated."""
    if inst.base is None:
        raise ValueError("only rotated critical instances carry an exact destabilizer")
    v = analyze(torus_spec(inst.rep()), inst.base)
    if v.status is not Status.UNSTABLE:
        return Fraction(0), np.zeros(3)
    return v.Msq, _su2_rotate([float(v.tau_x[0]), 0.0, 0.0], inst.rotation)


def _exact_xi_torus(inst: TorusInstance, rep: HermitianRep):
    v = analyze(inst.spec, inst.point)
    if v.status is not Status.UNSTABLE:
        return None
    return rep.embed_toral(rep.coords_from_tau(v.tau_x))


def _conjugacy_rows(torus_instances, torus_outcomes, sl2_instances, sl2_outcomes):
    for inst, out in zip(torus_instances, torus_outcomes):
        rep = HermitianRep.from_torus(inst.spec)
        yield torus_payload(inst), rep, _exact_xi_torus(inst, rep), out
    for inst, out in zip(sl2_instances, sl2_outcomes):
        msq, xi = sl2_exact_direction(inst)
        yield sl2_payload(inst), inst.rep(), (xi if msq > 0 else None), out


def check_lambda_conjugacy(
    torus_instances: Sequence[TorusInstance] = (),
    sl2_instances: Sequence[SL2Instance] = (),
    torus_outcomes: Sequence[FlowOutcome] | None = None,
    sl2_outcomes: Sequence[FlowOutcome] | None = None,
    opts: FlowOptions | None = None,
    tol: float = FLOW_VS_EXACT_TOL,
) -> CheckReport:
    """moment(x_inf) and the exact optimal direction have the same spectrum."""
    opts = opts or FlowOptions()
    torus_outcomes = torus_outcomes if torus_outcomes is not None else torus_flows(torus_instances, opts)
    sl2_outcomes = sl2_outcomes if sl2_outcomes is not None else sl2_flows(sl2_instances, opts)
    report = CheckReport("lambda-conjugacy", tolerances={"spectrum": tol})
    for payload, rep, xi, out in _conjugacy_rows(torus_instances, torus_outcomes, sl2_instances, sl2_outcomes):
        if xi is None:
            report.skipped += 1
            continue
        report.instances_run += 1
        if _flow_failure(report, payload, out, opts):
            continue
        dev = float(np.abs(spectrum(rep, out.result.phi_inf) - spectrum(rep, xi)).max())
        report.observe(dev)
        if dev > tol:
            report.fail(payload, f"spectra of moment(x_inf) and tau_x differ by {dev:.3e}", dev)
    return report


def check_chen_sun(
    torus_instances: Sequence[TorusInstance] = (),
    sl2_instances: Sequence[SL2Instance] = (),
    torus_outcomes: Sequence[FlowOutcome] | None = None,
    sl2_outcomes: Sequence[FlowOutcome] | None = None,
    opts: FlowOptions | None = None,
    tol: float = FLOW_VS_EXACT_TOL,
) -> CheckReport:
    """|xi_inf| = |moment(x_inf)| and xi_inf is K-conjugate to moment(x_inf) on unstable points."""
    opts = opts or FlowOptions()
    torus_outcomes = torus_outcomes if torus_outcomes is not None else torus_flows(torus_instances, opts)
    sl2_outcomes = sl2_outcomes if sl2_outcomes is not None else sl2_flows(sl2_instances, opts)
    report = CheckReport("chen-sun", tolerances={"norm": tol, "spectrum": tol})
    for payload, rep, xi, out in _conjugacy_rows(torus_instances, torus_outcomes, sl2_instances, sl2_outcomes):
        if xi is None:
            report.skipped += 1
            continue
        report.instances_run += 1
        if _flow_failure(report, payload, out, opts):
            continue
        r = out.result
        if not np.all(np.isfinite(r.xi_inf)):
            report.fail(payload, "xi_inf was not estimated")
            continue
        dn = abs(float(np.linalg.norm(r.xi_inf)) - float(np.linalg.norm(r.phi_inf)))
        ds = float(np.abs(spectrum(rep, r.xi_inf) - spectrum(rep, r.phi_inf)).max())
        report.observe(max(dn, ds))
        if dn > tol or ds > tol:
            report.fail(payload, f"xi_inf vs moment(x_inf): norm gap {dn:.2e}, spectrum gap {ds:.2e}", max(dn, ds))
    return report


# ---------------------------------------------------------------- shifting trick


def _other_directions(spec, lam) -> list[tuple[Fraction, ...]]:
    """Characters different from lam with dual norm at most that of lam."""
    dual = spec.form.dual()
    bound = dual.sq(lam)
    out = [tuple(c * f for c in lam) for f in (Fraction(1, 2), Fraction(3, 4))]
    for i in range(spec.rank):
        for sign in (1, -1):
            cand = tuple(c + (Fraction(sign, 4) if j == i else 0) for j, c in enumerate(lam))
            if any(cand) and dual.sq(cand) <= bound:
                out.append(cand)
    return out


def _ell(lam) -> int:
    ell = 1
    for c in lam:
        ell = ell * c.denominator // math.gcd(ell, c.denominator)
    return ell


def _shift_size(spec, ell) -> int:
    return math.comb(spec.dimE + ell - 1, ell) * max(spec.dimV, 1)


def _shift_exact(spec, x, lam) -> Status | None:
    """Status of the shifted point (0 in its weight polyhedron), or None when the
    symmetric power is too large to build."""
    ell = _ell(lam)
    if _shift_size(spec, ell) > MAX_SHIFT_SLOTS:
        return None
    g = GroupSpec.torus(spec.rank, spec.form)
    shifted = shift_rep(spec, g, ell, lam)
    poly = weight_polyhedron(shifted, shift_point(x, ell))
    return Status.SEMISTABLE if contains(poly, (0,) * spec.rank) else Status.UNSTABLE


def check_shifting(
    torus_instances: Sequence[TorusInstance] = (),
    sl2_instances: Sequence[SL2Instance] = (),
    opts: FlowOptions | None = None,
    tol: float = SEMISTABLE_TOL,
) -> CheckReport:
    """Shifting by the optimal character gives a semistable point; other characters
    of at most the same norm do not.

    Torus instances are decided exactly; SL2 instances (rotated critical points)
    by the flow on V x P(E) x (orbit of the shifting line).
    """
    opts = opts or FlowOptions()
    report = CheckReport("shifting", tolerances={"exact": 0.0, "semistable": tol})
    too_large = converse = 0
    for inst in torus_instances:
        s, x = inst.spec, inst.point
        v = analyze(s, x)
        if v.status is not Status.UNSTABLE:
            report.skipped += 1
            continue
        _, lam = tau_flat(GroupSpec.torus(s.rank, s.form), v.tau_x)
        status = _shift_exact(s, x, lam)
        if status is None:
            report.skipped += 1
            too_large += 1
            continue
        report.instances_run += 1
        if status is Status.UNSTABLE:
            report.fail(torus_payload(inst), "shift by the optimal character is unstable")
        for other in _other_directions(s, lam):
            status = _shift_exact(s, x, other)
            if status is None:
                too_large += 1
            elif status is not Status.UNSTABLE:
                report.fail(torus_payload(inst, character=[str(c) for c in other]), "shift by a non-optimal character is semistable")
            else:
                converse += 1
    rows = parallel_map(partial(_sl2_shift_row, opts=opts), list(sl2_instances))
    for inst, row in zip(sl2_instances, rows):
        if row is None:
            report.skipped += 1
            continue
        report.instances_run += 1
        for label, out, want_semistable in row:
            payload = sl2_payload(inst, shift=label)
            if out.result is None:
                report.fail(payload, f"flow failed: {out.error}")
                continue
            m = out.result.M_estimate
            if want_semistable:
                report.observe(m)
                if m > tol or out.error is not None:
                    report.fail(payload, f"optimal shift not semistable: |moment(x_inf)| = {m:.3e}", m)
            elif m <= tol:
                report.fail(payload, f"non-optimal shift flowed to |moment| = {m:.3e}")
            else:
                converse += 1
    report.details = {"too_large": too_large, "converse_checked": converse}
    return report


def _sl2_shift_row(inst: SL2Instance, opts=None):
    # Dominant characters of SL2 below the optimal one are its multiples c * xi, c < 1.
    msq, xi = sl2_exact_direction(inst)
    if msq <= 0:
        return None
    rep, x = inst.rep(), inst.state()
    row = []
    for label, c in (("optimal", 1.0), ("half", 0.5), ("nine-tenths", 0.9)):
        r2, x2 = shifted_by_direction(rep, x, c * xi)
        row.append((label, run_flow(r2, x2, opts), c == 1.0))
    return row


# ---------------------------------------------------------------- Theorem C and convexity


def _interval(poly: VPolyhedron) -> tuple[float, float]:
    if poly.is_empty:
        return math.inf, -math.inf
    lo = min(float(p[0]) for p in poly.points)
    hi = max(float(p[0]) for p in poly.points)
    if any(r[0] > 0 for r in poly.rays):
        hi = math.inf
    if any(r[0] < 0 for r in poly.rays):
        lo = -math.inf
    return lo, hi


def _dist_interval(lo, hi, t) -> float:
    if lo > hi:
        return math.inf
    return max(lo - t, t - hi, 0.0)


@dataclass
class BxData:
    payload: dict
    polyhedron: VPolyhedron
    sampled: object
    chamber_points: list[float]
    grid: list[Fraction]
    semistable: list[bool | None]


def _sl2_only(inst: SL2Instance) -> HermitianRep:
    rep = inst.rep()
    if len(rep.blocks) != 1 or rep.blocks[0].kind != "su2":
        raise ValueError("Theorem C checks support a single SL2 factor")
    return rep


def _b_orbit_chamber_points(rep: HermitianRep, x: StatePoint, rng, starts: int) -> list[float]:
    """moment(b x) for b in B found by driving the off-chamber coordinates to zero."""
    nv, ne = raising_generators(rep)[0]

    def point(p):
        z, s = p[0] + 1j * p[1], p[2] + 1j * p[3]
        av, ae = rep.action(np.array([z, 0.0, 0.0]))
        v = expm(av) @ expm(s * nv) @ x.v if rep.dimV else x.v
        return rep.point(v, expm(ae) @ expm(s * ne) @ x.m)

    def resid(p):
        return moment(rep, point(p))[1:]

    found = []
    for _ in range(starts):
        p0 = rng.uniform(-2, 2, size=4)
        try:
            sol = least_squares(resid, p0, bounds=(-8, 8), xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=400)
        except (ValueError, np.linalg.LinAlgError):
            continue
        if np.abs(sol.fun).max() < 1e-9:
            phi = moment(rep, point(sol.x))
            if phi[0] >= 0:
                found.append(float(phi[0]))
    return found


def _lambda_grid(lo: float, hi: float, step: Fraction, cap: float = 8.0) -> list[Fraction]:
    top = (hi + 1.0) if math.isfinite(hi) else max(lo, 0.0) + 3.0
    top = min(top, cap)
    out, k = [], 0
    while k * step <= top:
        out.append(k * step)
        k += 1
    return out


def _shift_flow(args, opts=None) -> bool | None:
    rep, x, lam = args
    r2, x2 = shifted_system(rep, x, lam)
    out = run_flow(r2, x2, opts)
    if out.result is None:
        return None
    return out.result.M_estimate <= SEMISTABLE_TOL


def _bx_jobs(rep, x, g, sampler, payload, rng, starts, step):
    sampled = P_U_sampled(torus_spec(rep), x, sampler)
    poly = moment_polyhedron_Bx(g, sampled)
    lo, hi = _interval(poly)
    grid = _lambda_grid(lo if math.isfinite(lo) else 0.0, hi, step)
    data = BxData(payload, poly, sampled, _b_orbit_chamber_points(rep, x, rng, starts), grid, [])
    return data, [(rep, x, (lam,)) for lam in grid]


def bx_data(
    rep: HermitianRep,
    x: StatePoint,
    sampler: UnipotentSampler,
    payload: dict,
    seed: int = 0,
    starts: int = 24,
    step: Fraction = Fraction(1, 4),
    opts: FlowOptions | None = None,
) -> BxData:
    """Two-sided Theorem C data for one point of a single-SL2 representation."""
    if len(rep.blocks) != 1 or rep.blocks[0].kind != "su2":
        raise ValueError("the two-sided check supports a single SL2 factor")
    data, jobs = _bx_jobs(rep, x, GroupSpec.sl2(), sampler, payload, np.random.default_rng(seed), starts, step)
    data.semistable = parallel_map(partial(_shift_flow, opts=opts), jobs)
    return data


def theorem_c_data(
    instances: Sequence[SL2Instance],
    seed: int = 0,
    starts: int = 24,
    step: Fraction = Fraction(1, 4),
    opts: FlowOptions | None = None,
) -> list[BxData]:
    """Sampled polyhedra, chamber points of B-orbits and shifted-flow verdicts on a lambda grid."""
    g = GroupSpec.sl2()
    rng = np.random.default_rng(seed)
    data, jobs, owners = [], [], []
    for inst in instances:
        rep = _sl2_only(inst)
        sampler = UnipotentSampler.for_rep(rep, seed=seed)
        d, js = _bx_jobs(rep, inst.state(), g, sampler, sl2_payload(inst), rng, starts, step)
        data.append(d)
        jobs.extend(js)
        owners.extend([len(data) - 1] * len(js))
    verdicts = parallel_map(partial(_shift_flow, opts=opts), jobs)
    for owner, verdict in zip(owners, verdicts):
        data[owner].semistable.append(verdict)
    return data


def check_theorem_C(
    data: Sequence[BxData], slack: float = FLOW_VS_EXACT_TOL, margin: float = BOUNDARY_MARGIN
) -> CheckReport:
    """Chamber points of B-orbits lie in the polyhedron; shifted-flow verdicts on a
    lambda grid agree with membership away from the boundary."""
    report = CheckReport("theorem-C", tolerances={"containment": slack, "boundary_margin": margin})
    grid_points = agreed = chamber_points = 0
    for d in data:
        report.instances_run += 1
        lo, hi = _interval(d.polyhedron)
        payload = {**d.payload, "polyhedron": str(d.polyhedron)}
        for val in d.chamber_points:
            chamber_points += 1
            dev = _dist_interval(lo, hi, val)
            report.observe(dev)
            if dev > slack:
                report.fail(payload, f"B-orbit point with moment {val:.6f} in the chamber lies {dev:.3e} outside", dev)
        for lam, ss in zip(d.grid, d.semistable):
            t = float(lam)
            if lo <= hi and min(abs(t - lo), abs(t - hi)) < margin:
                continue
            grid_points += 1
            inside = contains(d.polyhedron, (lam,))
            if ss is None:
                report.fail(payload, f"shifted flow at lambda={lam} failed")
            elif ss != inside:
                report.fail(payload, f"lambda={lam}: polyhedron says {'in' if inside else 'out'}, flow says "
                            f"{'semistable' if ss else 'unstable'}")
            else:
                agreed += 1
    report.details = {"grid_points": grid_points, "agreed": agreed, "chamber_points": chamber_points}
    return report


def _certified_pairs(grid, verdicts):
    """Pairs of certified grid points with every grid point between them."""
    cert = [i for i, ok in enumerate(verdicts) if ok]
    for a in range(len(cert)):
        for b in range(a + 1, len(cert)):
            i, j = cert[a], cert[b]
            if j - i >= 2:
                yield i, j


def check_convexity_sl2(data: Sequence[BxData]) -> CheckReport:
    """Every grid point between two certified points of C(closure of Bx) certifies."""
    report = CheckReport("convexity", tolerances={"semistable": SEMISTABLE_TOL})
    pairs = 0
    for d in data:
        report.instances_run += 1
        for i, j in _certified_pairs(d.grid, d.semistable):
            pairs += 1
            bad = [str(d.grid[k]) for k in range(i + 1, j) if not d.semistable[k]]
            if bad:
                report.fail({**d.payload, "pair": [str(d.grid[i]), str(d.grid[j])], "between": bad},
                            "an intermediate character does not certify")
    report.details["pairs"] = pairs
    return report


def _torus_grid(poly: VPolyhedron, step: Fraction, pad: int = 1, cap: int = 6) -> list[tuple[Fraction, ...]]:
    r = poly.rank
    lows = [min(p[k] for p in poly.points) for k in range(r)]
    highs = [max(p[k] for p in poly.points) for k in range(r)]
    axes = []
    for lo, hi in zip(lows, highs):
        a = math.floor(lo / step) - pad
        b = math.ceil(hi / step) + pad
        mid = (a + b) // 2
        a, b = max(a, mid - cap), min(b, mid + cap)
        axes.append([k * step for k in range(a, b + 1)])
    return [tuple(p) for p in np.array(np.meshgrid(*axes, indexing="ij"), dtype=object).reshape(r, -1).T]


def check_convexity_torus(
    instances: Sequence[TorusInstance], step: Fraction = Fraction(1, 2), opts: FlowOptions | None = None
) -> CheckReport:
    """Midpoints of flow-certified characters certify (rank <= 2); recession cone of
    C(closure of Tx) is minus the cone of V-support weights, exactly."""
    report = CheckReport("convexity-torus", tolerances={"semistable": SEMISTABLE_TOL, "recession": 0.0})
    pairs = 0
    for inst in instances:
        s, x = inst.spec, inst.point
        report.instances_run += 1
        g = GroupSpec.torus(s.rank, s.form)
        poly = moment_polyhedron_Bx(g, weight_polyhedron(s, x))
        expected = VPolyhedron.cone([neg(w) for w in support_V(s, x)], s.rank)
        if not set_equal(recession_rays(poly), expected):
            report.fail(torus_payload(inst), "recession cone differs from minus the V-support cone")
        if s.rank > 2:
            continue
        rep, xs = torus_state(inst)
        grid = _torus_grid(poly, step)
        verdicts = parallel_map(partial(_shift_flow, opts=opts), [(rep, xs, list(lam)) for lam in grid])
        index = {lam: k for k, lam in enumerate(grid)}
        cert = [lam for lam, ok in zip(grid, verdicts) if ok]
        for a in range(len(cert)):
            for b in range(a + 1, len(cert)):
                mid = tuple((p + q) / 2 for p, q in zip(cert[a], cert[b]))
                if mid not in index:
                    continue
                pairs += 1
                if not verdicts[index[mid]]:
                    report.fail(torus_payload(inst, pair=[[str(c) for c in cert[a]], [str(c) for c in cert[b]]]),
                                "midpoint of certified characters does not certify")
    report.details["pairs"] = pairs
    return report


# ---------------------------------------------------------------- stratification


def _perturb(x: StatePoint, eps: float, rng) -> StatePoint:
    dv = rng.normal(size=x.v.shape) + 1j * rng.normal(size=x.v.shape)
    dm = rng.normal(size=x.m.shape) + 1j * rng.normal(size=x.m.shape)
    return StatePoint(x.v + eps * dv, x.m + eps * dm, x.factors)


def check_strata(
    instances: Sequence[TorusInstance],
    perturbations: int = 200,
    eps: float = 1e-3,
    starts_per_instance: int = 5,
    seed: int = 0,
    opts: FlowOptions | None = None,
    tol: float = FLOW_VS_EXACT_TOL,
) -> CheckReport:
    """Partition, closure ordering under perturbation, and density of the open stratum.

    Perturbations cycle over (instance, stratum) witnesses: each witness is flowed to
    its critical limit, perturbed by eps, and flowed again; the new |beta| may not exceed
    the old one and a generic perturbation lands in the open stratum.
    """
    opts = opts or FlowOptions()
    rng = np.random.default_rng(seed)
    report = CheckReport("strata", tolerances={"label": tol, "epsilon": eps}, seed=seed)
    starts = reached = 0
    witnesses = []
    for inst in instances:
        s = inst.spec
        if s.dimE + s.dimV > 10:
            report.skipped += 1
            continue
        report.instances_run += 1
        strata = enumerate_strata(s)
        labels = [st.label for st in strata]
        lab = analyze(s, inst.point)
        lab = lab.tau_x if lab.status is Status.UNSTABLE else SEMISTABLE
        if labels.count(lab) != 1:
            report.fail(torus_payload(inst), f"label {lab} occurs {labels.count(lab)} times among the strata")
        open_m = min(math.sqrt(st.Msq) for st in strata)
        rep = HermitianRep.from_torus(s)
        for _ in range(starts_per_instance):
            e = rng.normal(size=s.dimE) + 1j * rng.normal(size=s.dimE)
            v = rng.normal(size=s.dimV) + 1j * rng.normal(size=s.dimV)
            out = run_flow(rep, rep.point(v, e), opts)
            starts += 1
            if out.result is not None and abs(out.result.M_estimate - open_m) <= tol:
                reached += 1
        for st in strata:
            witnesses.append((inst, rep, st, open_m))

    perturbed = 0
    bases: dict[int, FlowOutcome] = {}
    while witnesses and perturbed < perturbations:
        k = perturbed % len(witnesses)
        inst, rep, st, open_m = witnesses[k]
        payload = torus_payload(inst, stratum=str(st.label))
        if k not in bases:
            x0 = StatePoint.from_torus_point(point_with_support(inst.spec, st.support_E, st.support_V))
            bases[k] = run_flow(rep, x0, opts)
            if bases[k].result is not None:
                report.observe(abs(bases[k].result.M_estimate - math.sqrt(st.Msq)))
        base = bases[k]
        perturbed += 1
        if base.result is None:
            report.fail(payload, f"flow failed: {base.error}")
            continue
        beta = base.result.M_estimate
        out = run_flow(rep, _perturb(base.result.x_inf, eps, rng), opts)
        if out.result is None:
            report.fail(payload, f"perturbed flow failed: {out.error}")
        elif out.result.M_estimate > beta + tol:
            report.fail(payload, f"perturbation raised |beta| from {beta:.4f} to {out.result.M_estimate:.4f}")
        elif abs(out.result.M_estimate - open_m) > tol:
            report.fail(payload, f"perturbation stopped at |beta| = {out.result.M_estimate:.4f}, open stratum has {open_m:.4f}")
    report.details = {
        "perturbations": perturbed,
        "random_starts": starts,
        "open_stratum_fraction": reached / starts if starts else 1.0,
    }
    if starts and reached / starts < 0.99:
        report.failures.append({"reason": f"open stratum reached by {reached}/{starts} random starts",
                                "deviation": None, "instance": None})
    return report


# ---------------------------------------------------------------- numerical hygiene


def _random_tangent(rep: HermitianRep, x: StatePoint, rng):
    hv = rng.normal(size=rep.dimV) + 1j * rng.normal(size=rep.dimV)
    hm = horizontal(rep, x, rng.normal(size=rep.dimE) + 1j * rng.normal(size=rep.dimE))
    return hv, hm


def gradient_fd_error(rep: HermitianRep, x: StatePoint, h, eps: float = 1e-5) -> float | None:
    """Gap between <grad f, h> and a central difference of f, relative to |grad f| |h|.

    None at critical points, where there is no scale to be relative to.
    """
    g = grad_f(rep, x)
    scale = math.sqrt(kahler_inner(rep, x, g, g) * kahler_inner(rep, x, h, h))
    if scale < CRITICAL_GRAD:
        return None
    exact = kahler_inner(rep, x, g, h)
    plus = StatePoint(x.v + eps * h[0], x.m + eps * h[1], x.factors)
    minus = StatePoint(x.v - eps * h[0], x.m - eps * h[1], x.factors)
    fd = (f_value(rep, plus) - f_value(rep, minus)) / (2 * eps)
    return abs(exact - fd) / scale


def check_hygiene(
    reps_and_points: Sequence[tuple[HermitianRep, StatePoint]],
    outcomes: Sequence[FlowOutcome] = (),
    seed: int = 0,
    fd_tol: float = 1e-6,
    convexity_tol: float = 1e-9,
) -> CheckReport:
    """Finite-difference gradients, Kempf-Ness convexity and monotone trajectories."""
    rng = np.random.default_rng(seed)
    report = CheckReport("hygiene", tolerances={"fd_relative": fd_tol, "second_derivative": convexity_tol}, seed=seed)
    worst_fd, worst_second = 0.0, math.inf
    fd_triples = 0
    for k, (rep, x) in enumerate(reps_and_points):
        report.instances_run += 1
        err = gradient_fd_error(rep, x, _random_tangent(rep, x, rng))
        if err is not None:
            fd_triples += 1
            worst_fd = max(worst_fd, err)
            if err > fd_tol:
                report.fail({"index": k}, f"gradient vs finite differences: relative error {err:.2e}", err)
        lam = rng.normal(size=rep.d)
        for t in np.linspace(-3, 3, 25):
            second = kempf_ness(rep, x, lam, float(t))[2]
            worst_second = min(worst_second, second)
            if second < -convexity_tol:
                report.fail({"index": k, "t": float(t)}, f"Kempf-Ness second derivative {second:.2e}")
    increases = 0
    for k, out in enumerate(outcomes):
        if out.result is None:
            continue
        bad = out.result.f_increases + out.result.phi_increases
        increases += bad
        if bad:
            report.fail({"trajectory": k}, f"{out.result.f_increases} f and {out.result.phi_increases} |moment| increases")
    report.max_deviation = worst_fd
    report.details = {
        "fd_triples": fd_triples,
        "worst_fd_relative": worst_fd,
        "min_second_derivative": worst_second if math.isfinite(worst_second) else None,
        "trajectories": len(outcomes),
        "monotonicity_violations": increases,
    }
    return report


__all__ = [
    "BxData",
    "FlowOutcome",
    "check_M_equality",
    "check_chen_sun",
    "check_convexity_sl2",
    "check_convexity_torus",
    "check_hygiene",
    "check_lambda_conjugacy",
    "check_ness",
    "check_ness_converse",
    "check_shifting",
    "check_strata",
    "check_theorem_C",
    "bx_data",
    "gradient_fd_error",
    "run_flow",
    "sl2_exact_direction",
    "sl2_flows",
    "spectrum",
    "theorem_c_data",
    "torus_flows",
    "torus_state",
]
