"""Moment map, the gradient flow of |moment|^2/2, and related invariants on V x P(E).

Sign convention: a basis element acting by the matrix A sends a weight-chi
line to i<chi, .> times itself, so the moment image of a weight vector is
-chi. The Kahler metric is Re<.,.> on V and 2 Re<.,.>/|m|^2 on horizontal
vectors of E, which makes grad f = (i A(phi) v, P_m(i A(phi) m)).
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import LSODA
from scipy.linalg import expm

from . import _kernels
from .rep import HermitianRep, RepresentationError, StatePoint

NEG_INFINITY = float("-inf")
MOMENT_IMAG_TOL = 1e-12
_EPS = np.finfo(float).eps


class NumericalError(RuntimeError):
    """The integrator or an eigensolver failed."""


class NonConverged(RuntimeError):
    """The flow hit its time or step budget; `result` holds the partial diagnostics."""

    def __init__(self, message: str, result: FlowResult):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class FlowOptions:
    tol_grad: float = 1e-8
    t_max: float = 1e8
    rtol: float = 1e-10
    atol: float = 1e-13
    ss_tol: float = 1e-6
    plateau_tol: float = 1e-7
    xi_tol: float = 1e-6
    min_time: float = 4.0
    max_steps: int = 200_000
    track_xi: bool = True
    escape_factor: float = 1e3
    first_checkpoint: float = 0.125


@dataclass(frozen=True, eq=False)
class FlowResult:
    x_inf: StatePoint
    phi_inf: np.ndarray
    grad_norm_final: float
    beta: np.ndarray
    beta_tau: np.ndarray
    xi_inf: np.ndarray
    xi_err: float
    M_estimate: float
    t_final: float
    steps: int
    nfev: int
    njev: int
    f_increases: int
    phi_increases: int
    converged: bool
    reason: str
    trajectory: np.ndarray = field(repr=False)

    @property
    def semistable(self) -> bool:
        return self.M_estimate <= FlowOptions.ss_tol


# ---------------------------------------------------------------- pointwise quantities


def _complex_moment(rep: HermitianRep, x: StatePoint) -> np.ndarray:
    pv = np.einsum("i,kij,j->k", x.v.conj(), rep.kV, x.v)
    pm = np.zeros(rep.d, dtype=complex)
    for (lo, hi), w in zip(zip(rep.bounds[:-1], rep.bounds[1:]), rep.weights):
        m = x.m[lo:hi]
        pm += w * np.einsum("i,kij,j->k", m.conj(), rep.kE[:, lo:hi, lo:hi], m) / np.vdot(m, m).real
    return 0.5j * pv + 1j * pm


def moment(rep: HermitianRep, x: StatePoint) -> np.ndarray:
    x.check(rep)
    phi = _complex_moment(rep, x)
    scale = float(rep.weights.sum()) + 0.5 * np.vdot(x.v, x.v).real
    scale *= max(np.abs(rep.kE).max(), np.abs(rep.kV).max(initial=0.0))
    if np.abs(phi.imag).max() > MOMENT_IMAG_TOL * max(scale, 1.0):
        raise RepresentationError(f"moment has an imaginary part {np.abs(phi.imag).max():.2e}")
    return phi.real


def f_value(rep: HermitianRep, x: StatePoint) -> float:
    phi = moment(rep, x)
    return 0.5 * float(phi @ phi)


def horizontal(rep: HermitianRep, x: StatePoint, hm: np.ndarray) -> np.ndarray:
    """Project an m-direction onto the orthogonal complement of each unit factor."""
    out = np.array(hm, dtype=complex)
    for lo, hi in zip(rep.bounds[:-1], rep.bounds[1:]):
        m = x.m[lo:hi]
        out[lo:hi] -= np.vdot(m, out[lo:hi]) * m
    return out


def grad_f(rep: HermitianRep, x: StatePoint) -> tuple[np.ndarray, np.ndarray]:
    """(v-component, m-component) of the gradient at the unit representative."""
    phi = moment(rep, x)
    av, ae = rep.action(phi)
    return 1j * (av @ x.v), horizontal(rep, x, 1j * (ae @ x.m))


def kahler_inner(rep: HermitianRep, x: StatePoint, h1, h2) -> float:
    """Metric pairing of two tangent vectors (v-part, horizontal m-part) at x."""
    total = np.vdot(h1[0], h2[0]).real
    for (lo, hi), w in zip(zip(rep.bounds[:-1], rep.bounds[1:]), rep.weights):
        total += 2.0 * w * np.vdot(h1[1][lo:hi], h2[1][lo:hi]).real
    return float(total)


# ---------------------------------------------------------------- group action


def group_act(rep: HermitianRep, z, x: StatePoint) -> StatePoint:
    """Apply exp(sum z_k A_k) for complex coefficients z (an element of the complexified group)."""
    av, ae = rep.action(np.asarray(z, dtype=complex))
    v = expm(av) @ x.v if rep.dimV else x.v
    return StatePoint(v, expm(ae) @ x.m, x.factors)


# ---------------------------------------------------------------- the flow


class _StateSystem:
    """Right-hand side on the packed state [v, m, xi, Ad_u]."""

    def __init__(self, rep: HermitianRep, x: StatePoint, companion: int):
        self.rep, self.companion = rep, companion
        self.n = 2 * (rep.dimV + rep.dimE)
        parts = [x.pack()]
        if companion:
            parts.append(np.zeros(rep.d))
        if companion == 2:
            parts.append(np.eye(rep.d).ravel())
        self.y0 = np.concatenate(parts)

    def fun(self, _t, y):
        r = self.rep
        return _kernels.flow_rhs(y, r.kV, r.kE, r.adm, r.dimV, r.dimE, r.bounds, r.weights, self.companion)

    def state(self, y):
        return y[: self.n]

    def xi(self, y):
        return y[self.n : self.n + self.rep.d] if self.companion else None


def flow(rep: HermitianRep, x: StatePoint, opts: FlowOptions | None = None) -> FlowResult:
    """Integrate the negative gradient flow of f to convergence.

    Raises NonConverged (with the partial result attached) when the time or
    step budget runs out before the stopping rule is met.
    """
    opts = opts or FlowOptions()
    x.check(rep)
    n_v, n_e, d = rep.dimV, rep.dimE, rep.d
    companion = 0 if not opts.track_xi else (1 if rep.is_abelian else 2)
    system = _StateSystem(rep, x, companion)
    av, ae = rep.kV, rep.kE
    bounds, weights = rep.bounds, rep.weights

    def diag(y, av, ae, n_v, n_e):
        return _kernels.flow_diagnostics(y, av, ae, n_v, n_e, bounds, weights)

    solver = LSODA(system.fun, 0.0, system.y0, opts.t_max, rtol=opts.rtol, atol=opts.atol)
    phi, f, pn, gn, sc = diag(system.state(system.y0), av, ae, n_v, n_e)
    traj = [(0.0, f, pn, gn)]
    times, norms = [0.0], [pn]
    checkpoints: list[tuple[float, np.ndarray]] = []
    next_cp = opts.first_checkpoint
    f_inc = phi_inc = 0
    reason = ""
    converged = False
    # Non-abelian actions mix weight lines, so rounding pushes points of a
    # non-open stratum off it at the 1e-16 level and the flow eventually leaves
    # the critical set it reached. Keep the best critical snapshot for that case.
    guard = not rep.is_abelian
    best = None

    while True:
        if len(traj) > opts.max_steps:
            reason = "step budget exhausted"
            break
        msg = solver.step()
        if solver.status == "failed":
            raise NumericalError(f"integrator failed at t={solver.t:.3e}: {msg}")
        y, t = solver.y, solver.t
        if not np.all(np.isfinite(y)):
            raise NumericalError(f"non-finite state at t={t:.3e}")
        phi, f_new, pn_new, gn, sc = diag(system.state(y), av, ae, n_v, n_e)
        slack = 64 * _EPS * sc
        if f_new > f + slack * (pn + pn_new) + 64 * _EPS * f:
            f_inc += 1
        if pn_new > pn + slack:
            phi_inc += 1
        f, pn = f_new, pn_new
        traj.append((t, f, pn, gn))
        times.append(t)
        norms.append(pn)
        if companion and t >= next_cp:
            checkpoints.append((t, system.xi(y).copy()))
            next_cp = 2.0 * t
        if guard and gn <= opts.tol_grad and (best is None or gn < best[0]):
            best = (gn, t, y.copy(), len(traj), len(checkpoints))
        if best is not None and gn > opts.escape_factor * opts.tol_grad:
            reason = "critical point reached; stopped when the trajectory left it"
            converged = True
            break
        if gn <= opts.tol_grad:
            if pn <= opts.ss_tol:
                converged, reason = True, "moment below semistability threshold"
            elif t >= opts.min_time and _plateau(times, norms, t) <= opts.plateau_tol:
                _, xi_err = _xi_limit(checkpoints, t, system.xi(y))
                if not companion or xi_err <= opts.xi_tol:
                    converged, reason = True, "moment norm and xi slope stabilized"
        if converged:
            break
        if solver.status == "finished":
            reason = "time budget exhausted"
            break

    y, t_final = solver.y, solver.t
    if best is not None and reason.startswith("critical point reached"):
        _, t_final, y, n_traj, n_cp = best
        traj, checkpoints = traj[:n_traj], checkpoints[:n_cp]
    xi_inf, xi_err = _xi_limit(checkpoints, t_final, system.xi(y))
    state = system.state(y)
    phi, f, pn, gn, _ = diag(state, av, ae, n_v, n_e)
    beta = rep.dominant(phi)
    result = FlowResult(
        x_inf=StatePoint.unpack(state, n_v, n_e, rep.factor_sizes),
        phi_inf=np.asarray(phi).copy(),
        grad_norm_final=float(gn),
        beta=beta,
        beta_tau=rep.tau_from_coords(beta),
        xi_inf=xi_inf if xi_inf is not None else np.full(d, np.nan),
        xi_err=float(xi_err),
        M_estimate=float(pn),
        t_final=float(t_final),
        steps=len(traj) - 1,
        nfev=int(solver.nfev),
        njev=int(solver.njev),
        f_increases=f_inc,
        phi_increases=phi_inc,
        converged=converged,
        reason=reason,
        trajectory=np.array(traj),
    )
    if not converged:
        raise NonConverged(f"flow did not converge: {reason} (t={solver.t:.3e}, grad={gn:.2e})", result)
    return result


def _plateau(times, norms, t) -> float:
    """Decrease of |phi| over the last halving of time."""
    i = bisect.bisect_left(times, 0.5 * t)
    return norms[max(i, 0)] - norms[-1]


def _xi_limit(checkpoints, t, xi_now):
    """Difference-quotient estimate of lim xi(t)/t and its uncertainty."""
    if xi_now is None:
        return None, math.inf
    pts = [(tc, xc) for tc, xc in checkpoints if tc < t] + [(t, np.asarray(xi_now))]
    if len(pts) < 2:
        return xi_now / max(t, 1e-300), math.inf
    (t0, x0), (t1, x1) = pts[-2], pts[-1]
    est = (x1 - x0) / (t1 - t0)
    if len(pts) < 3:
        return est, math.inf
    (tp, xp) = pts[-3]
    prev = (x0 - xp) / (t0 - tp)
    return est, float(np.linalg.norm(est - prev))


def semistable_flow(rep: HermitianRep, x: StatePoint, opts: FlowOptions | None = None) -> bool:
    opts = opts or FlowOptions()
    return flow(rep, x, opts).M_estimate <= opts.ss_tol


# ---------------------------------------------------------------- invariants


def _weight_decomposition(mat: np.ndarray, vec: np.ndarray):
    """Eigenvalues a of -i*mat with the squared components of vec on each eigenvector."""
    if mat.shape[0] == 0:
        return np.zeros(0), np.zeros(0)
    a, u = np.linalg.eigh(-1j * mat)
    return a, np.abs(u.conj().T @ vec) ** 2


def varpi_phi(rep: HermitianRep, x: StatePoint, lam, rel_tol: float = 1e-10) -> float:
    """lim_{t->inf} <moment(exp(-i t lam) x), lam> from the weight decomposition along lam."""
    lam = np.asarray(lam, dtype=float)
    if not np.any(lam):
        raise ValueError("zero direction")
    x.check(rep)
    av, ae = rep.action(lam)
    a_v, c_v = _weight_decomposition(av, x.v)
    if c_v.size and c_v.max() > 0:
        live = c_v > (rel_tol**2) * c_v.max()
        if np.any(a_v[live] > 1e-9 * max(1.0, np.abs(a_v).max())):
            return NEG_INFINITY
    total = 0.0
    for (lo, hi), w in zip(zip(rep.bounds[:-1], rep.bounds[1:]), rep.weights):
        a_e, c_e = _weight_decomposition(ae[lo:hi, lo:hi], x.m[lo:hi])
        live = c_e > (rel_tol**2) * c_e.max()
        total -= w * a_e[live].max()
    return float(total)


def kempf_ness(rep: HermitianRep, x: StatePoint, lam, t: float) -> tuple[float, float, float]:
    """Psi(exp(i t lam) x) - Psi(x) with its first and second t-derivatives."""
    lam = np.asarray(lam, dtype=float)
    if not np.any(lam):
        raise ValueError("zero direction")
    x.check(rep)
    av, ae = rep.action(lam)
    v_t = expm(1j * t * av) @ x.v if rep.dimV else x.v
    m_t = expm(1j * t * ae) @ x.m
    wv = av @ v_t
    value = 0.25 * (np.vdot(v_t, v_t).real - np.vdot(x.v, x.v).real)
    second = np.vdot(wv, wv).real
    for (lo, hi), w in zip(zip(rep.bounds[:-1], rep.bounds[1:]), rep.weights):
        mt = m_t[lo:hi]
        nm2 = np.vdot(mt, mt).real
        value += 0.5 * w * math.log(nm2)
        wm = ae[lo:hi, lo:hi] @ mt
        wm_h = wm - (np.vdot(mt, wm) / nm2) * mt
        second += 2.0 * w * np.vdot(wm_h, wm_h).real / nm2
    first = float(moment(rep, StatePoint(v_t, m_t, x.factors)) @ lam)
    return float(value), first, float(second)


def scaled(x: StatePoint, r: float) -> StatePoint:
    """The dilation (v, m) -> (sqrt(r) v, m)."""
    return StatePoint(math.sqrt(r) * x.v, x.m, x.factors)


__all__ = [
    "FlowOptions",
    "FlowResult",
    "NEG_INFINITY",
    "NonConverged",
    "NumericalError",
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
