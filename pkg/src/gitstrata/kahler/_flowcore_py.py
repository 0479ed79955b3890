"""Pure numpy implementation of the flow kernels (fallback for the compiled core).

State layout of a real vector y:
    y[0 : 2nV]            v, interleaved (re, im)
    y[2nV : 2(nV+nE)]     m, interleaved (re, im)
    y[o : o+d]            xi (companion modes 1 and 2)
    y[o+d : o+d+d*d]      Ad_u as a row-major d x d matrix (companion mode 2)

m is a tuple of projective factors: factor j occupies m[bounds[j]:bounds[j+1]]
and enters the moment map and the metric with weight weights[j].
"""

from __future__ import annotations

import numpy as np


def _split(y, n_v, n_e):
    z = y[: 2 * (n_v + n_e)].view(np.complex128)
    return z[:n_v], z[n_v:]


def _factor_norms(m, bounds):
    sq = (m * m.conj()).real
    return np.add.reduceat(sq, bounds[:-1]) if len(m) else np.zeros(0)


def moment_parts(y, AV, AE, n_v, n_e, bounds, weights):
    """Moment vector, the products A_k v and A_k m, and the squared factor norms."""
    v, m = _split(y, n_v, n_e)
    av = AV @ v
    am = AE @ m
    nm2 = _factor_norms(m, bounds)
    scale = np.repeat(weights / nm2, np.diff(bounds))
    phi = -0.5 * (av @ v.conj()).imag - (am @ (scale * m.conj())).imag
    return phi, av, am, nm2


def _gradient(y, AV, AE, n_v, n_e, bounds, weights):
    phi, av, am, nm2 = moment_parts(y, AV, AE, n_v, n_e, bounds, weights)
    _, m = _split(y, n_v, n_e)
    gv = 1j * (phi @ av)
    gm = 1j * (phi @ am)
    proj = np.add.reduceat(m.conj() * gm, bounds[:-1]) / nm2
    gm = gm - np.repeat(proj, np.diff(bounds)) * m
    return phi, gv, gm, nm2


def _companion_rates(xi, rot, phi, adm):
    d = len(xi)
    c = np.tensordot(xi, adm, axes=1)
    s_mat = -(c @ c)
    w, u = np.linalg.eigh(0.5 * (s_mat + s_mat.T))
    s = np.sqrt(np.clip(w, 0.0, None))
    small = s < 1e-8
    safe = np.where(small, 1.0, s)
    g = np.where(small, 1.0 - s * s / 6.0, safe / np.sinh(np.minimum(safe, 700.0)))
    g = np.where(s > 700.0, 0.0, g)
    h = np.where(small, 0.5 - s * s / 24.0, np.tanh(safe / 2.0) / safe)
    psi = rot @ phi
    proj = u.T @ psi
    dxi = u @ (g * proj)
    eta = u @ (h * proj)
    kappa = -(c @ eta)
    drot = np.tensordot(kappa, adm, axes=1) @ rot
    return dxi, drot.reshape(d * d)


def flow_rhs(y, AV, AE, adm, n_v, n_e, bounds, weights, companion):
    n = 2 * (n_v + n_e)
    d = AV.shape[0]
    phi, gv, gm, _ = _gradient(y, AV, AE, n_v, n_e, bounds, weights)
    out = np.empty_like(y)
    out[:n] = np.concatenate([-gv, -gm]).view(np.float64)
    if companion == 1:
        out[n : n + d] = phi
    elif companion == 2:
        xi = y[n : n + d]
        rot = y[n + d : n + d + d * d].reshape(d, d)
        dxi, drot = _companion_rates(xi, rot, phi, adm)
        out[n : n + d] = dxi
        out[n + d :] = drot
    return out


def flow_diagnostics(y, AV, AE, n_v, n_e, bounds, weights):
    """(phi, f, |phi|, |grad f| in the Kahler metric, roundoff scale of phi)."""
    phi, gv, gm, nm2 = _gradient(y, AV, AE, n_v, n_e, bounds, weights)
    v, _ = _split(y, n_v, n_e)
    pn = float(np.sqrt(phi @ phi))
    gmn = np.add.reduceat((gm * gm.conj()).real, bounds[:-1])
    gn = float(np.sqrt(np.vdot(gv, gv).real + 2.0 * np.sum(weights * gmn / nm2)))
    amax = max(np.abs(AV).max(initial=0.0), np.abs(AE).max(initial=0.0))
    scale = amax * (0.5 * np.vdot(v, v).real + float(np.sum(weights))) * max(n_v, n_e, 1)
    return phi, 0.5 * pn * pn, pn, gn, float(scale)
