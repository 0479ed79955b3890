# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled flow kernels; same contract as _flowcore_py."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, sinh, tanh, fabs

cnp.import_array()

ctypedef double complex cplx


cdef void _moment(const double[::1] y, const cplx[:, :, ::1] AV, const cplx[:, :, ::1] AE,
                  int nv, int ne, const long long[::1] bounds, const double[::1] weights,
                  cplx[:, ::1] av, cplx[:, ::1] am, double[::1] phi, double[::1] nm2) noexcept nogil:
    cdef int d = AV.shape[0]
    cdef int nf = weights.shape[0]
    cdef int k, i, j, q
    cdef cplx acc, s, vj
    cdef double part
    cdef int mo = 2 * nv
    for q in range(nf):
        part = 0.0
        for i in range(bounds[q], bounds[q + 1]):
            part += y[mo + 2 * i] * y[mo + 2 * i] + y[mo + 2 * i + 1] * y[mo + 2 * i + 1]
        nm2[q] = part
    for k in range(d):
        s = 0
        for i in range(nv):
            acc = 0
            for j in range(nv):
                acc = acc + AV[k, i, j] * (y[2 * j] + 1j * y[2 * j + 1])
            av[k, i] = acc
            s = s + (y[2 * i] - 1j * y[2 * i + 1]) * acc
        phi[k] = -0.5 * s.imag
        for i in range(ne):
            acc = 0
            for j in range(ne):
                acc = acc + AE[k, i, j] * (y[mo + 2 * j] + 1j * y[mo + 2 * j + 1])
            am[k, i] = acc
        for q in range(nf):
            s = 0
            for i in range(bounds[q], bounds[q + 1]):
                s = s + (y[mo + 2 * i] - 1j * y[mo + 2 * i + 1]) * am[k, i]
            phi[k] -= weights[q] * s.imag / nm2[q]


cdef void _gradient(const double[::1] y, int nv, int ne, const long long[::1] bounds,
                    const cplx[:, ::1] av, const cplx[:, ::1] am,
                    const double[::1] phi, const double[::1] nm2, cplx[::1] gv, cplx[::1] gm) noexcept nogil:
    cdef int d = av.shape[0]
    cdef int nf = nm2.shape[0]
    cdef int k, i, q
    cdef int mo = 2 * nv
    cdef cplx acc, proj
    for i in range(nv):
        acc = 0
        for k in range(d):
            acc = acc + phi[k] * av[k, i]
        gv[i] = 1j * acc
    for i in range(ne):
        acc = 0
        for k in range(d):
            acc = acc + phi[k] * am[k, i]
        gm[i] = 1j * acc
    for q in range(nf):
        proj = 0
        for i in range(bounds[q], bounds[q + 1]):
            proj = proj + (y[mo + 2 * i] - 1j * y[mo + 2 * i + 1]) * gm[i]
        proj = proj / nm2[q]
        for i in range(bounds[q], bounds[q + 1]):
            gm[i] = gm[i] - proj * (y[mo + 2 * i] + 1j * y[mo + 2 * i + 1])


cdef void _jacobi_eigh(double[:, ::1] a, double[::1] w, double[:, ::1] u) noexcept nogil:
    """Cyclic Jacobi for a small symmetric matrix: a = u diag(w) u^T (a is overwritten)."""
    cdef int n = a.shape[0]
    cdef int p, q, r, sweep
    cdef double off, theta, t, c, s, app, aqq, apq, arp, arq, urp, urq
    for p in range(n):
        for q in range(n):
            u[p, q] = 1.0 if p == q else 0.0
    for sweep in range(64):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += a[p, q] * a[p, q]
        if off < 1e-300:
            break
        for p in range(n):
            for q in range(p + 1, n):
                apq = a[p, q]
                if fabs(apq) < 1e-300:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                theta = (aqq - app) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (fabs(theta) + sqrt(theta * theta + 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for r in range(n):
                    arp = a[r, p]
                    arq = a[r, q]
                    a[r, p] = c * arp - s * arq
                    a[r, q] = s * arp + c * arq
                for r in range(n):
                    arp = a[p, r]
                    arq = a[q, r]
                    a[p, r] = c * arp - s * arq
                    a[q, r] = s * arp + c * arq
                for r in range(n):
                    urp = u[r, p]
                    urq = u[r, q]
                    u[r, p] = c * urp - s * urq
                    u[r, q] = s * urp + c * urq
    for p in range(n):
        w[p] = a[p, p]


cdef void _companion(const double[::1] y, int off, const double[::1] phi, const double[:, :, ::1] adm,
                     double[::1] out, double[:, ::1] c, double[:, ::1] smat, double[::1] w,
                     double[:, ::1] u, double[::1] work, double[::1] work2) noexcept nogil:
    cdef int d = phi.shape[0]
    cdef int i, j, k
    cdef double acc, s, g, h, pr
    # c = sum_i xi_i ad_i
    for j in range(d):
        for k in range(d):
            acc = 0.0
            for i in range(d):
                acc += y[off + i] * adm[i, j, k]
            c[j, k] = acc
    # smat = -c @ c (symmetric since c is skew)
    for j in range(d):
        for k in range(d):
            acc = 0.0
            for i in range(d):
                acc -= c[j, i] * c[i, k]
            smat[j, k] = acc
    for j in range(d):
        for k in range(j + 1, d):
            acc = 0.5 * (smat[j, k] + smat[k, j])
            smat[j, k] = acc
            smat[k, j] = acc
    _jacobi_eigh(smat, w, u)
    # psi = rot @ phi, then its coordinates in the eigenbasis
    for j in range(d):
        acc = 0.0
        for k in range(d):
            acc += y[off + d + j * d + k] * phi[k]
        work[j] = acc
    for j in range(d):
        acc = 0.0
        for k in range(d):
            acc += u[k, j] * work[k]
        work2[j] = acc
    # dxi = u g(S) u^T psi ; eta = u h(S) u^T psi (stored in work)
    for j in range(d):
        out[off + j] = 0.0
        work[j] = 0.0
    for i in range(d):
        s = sqrt(w[i]) if w[i] > 0 else 0.0
        if s < 1e-8:
            g = 1.0 - s * s / 6.0
            h = 0.5 - s * s / 24.0
        elif s > 700.0:
            g = 0.0
            h = tanh(s / 2.0) / s
        else:
            g = s / sinh(s)
            h = tanh(s / 2.0) / s
        pr = work2[i]
        for j in range(d):
            out[off + j] += u[j, i] * g * pr
            work[j] += u[j, i] * h * pr
    # kappa = -(c @ eta) into work2
    for j in range(d):
        acc = 0.0
        for k in range(d):
            acc -= c[j, k] * work[k]
        work2[j] = acc
    # drot = (sum_i kappa_i ad_i) @ rot
    for j in range(d):
        for k in range(d):
            acc = 0.0
            for i in range(d):
                acc += work2[i] * adm[i, j, k]
            c[j, k] = acc
    for j in range(d):
        for k in range(d):
            acc = 0.0
            for i in range(d):
                acc += c[j, i] * y[off + d + i * d + k]
            out[off + d + j * d + k] = acc


def flow_rhs(const double[::1] y, const cplx[:, :, ::1] AV, const cplx[:, :, ::1] AE,
             const double[:, :, ::1] adm, int nv, int ne, const long long[::1] bounds,
             const double[::1] weights, int companion):
    cdef int d = AV.shape[0]
    cdef int n = 2 * (nv + ne)
    cdef int i
    out_arr = np.empty(y.shape[0], dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef cplx[:, ::1] av = np.empty((d, nv), dtype=np.complex128)
    cdef cplx[:, ::1] am = np.empty((d, ne), dtype=np.complex128)
    cdef double[::1] phi = np.empty(d, dtype=np.float64)
    cdef double[::1] nm2 = np.empty(weights.shape[0], dtype=np.float64)
    cdef cplx[::1] gv = np.empty(nv, dtype=np.complex128)
    cdef cplx[::1] gm = np.empty(ne, dtype=np.complex128)
    cdef double[:, ::1] c, smat, u
    cdef double[::1] w, work, work2
    with nogil:
        _moment(y, AV, AE, nv, ne, bounds, weights, av, am, phi, nm2)
        _gradient(y, nv, ne, bounds, av, am, phi, nm2, gv, gm)
        for i in range(nv):
            out[2 * i] = -gv[i].real
            out[2 * i + 1] = -gv[i].imag
        for i in range(ne):
            out[2 * nv + 2 * i] = -gm[i].real
            out[2 * nv + 2 * i + 1] = -gm[i].imag
        if companion == 1:
            for i in range(d):
                out[n + i] = phi[i]
    if companion == 2:
        c = np.empty((d, d))
        smat = np.empty((d, d))
        u = np.empty((d, d))
        w = np.empty(d)
        work = np.empty(d)
        work2 = np.empty(d)
        with nogil:
            _companion(y, n, phi, adm, out, c, smat, w, u, work, work2)
    return out_arr


def moment_parts(const double[::1] y, const cplx[:, :, ::1] AV, const cplx[:, :, ::1] AE, int nv, int ne,
                 const long long[::1] bounds, const double[::1] weights):
    cdef int d = AV.shape[0]
    av = np.empty((d, nv), dtype=np.complex128)
    am = np.empty((d, ne), dtype=np.complex128)
    phi = np.empty(d, dtype=np.float64)
    nm2 = np.empty(weights.shape[0], dtype=np.float64)
    cdef cplx[:, ::1] av_v = av
    cdef cplx[:, ::1] am_v = am
    cdef double[::1] phi_v = phi
    cdef double[::1] nm2_v = nm2
    with nogil:
        _moment(y, AV, AE, nv, ne, bounds, weights, av_v, am_v, phi_v, nm2_v)
    return phi, av, am, nm2


def flow_diagnostics(const double[::1] y, const cplx[:, :, ::1] AV, const cplx[:, :, ::1] AE, int nv, int ne,
                     const long long[::1] bounds, const double[::1] weights):
    cdef int d = AV.shape[0]
    cdef int nf = weights.shape[0]
    cdef int i, j, k, q
    cdef double pn = 0.0, gn = 0.0, gmn, vn = 0.0, amax = 0.0, a, wsum = 0.0, gsum = 0.0
    cdef cplx[:, ::1] av = np.empty((d, nv), dtype=np.complex128)
    cdef cplx[:, ::1] am = np.empty((d, ne), dtype=np.complex128)
    phi_arr = np.empty(d, dtype=np.float64)
    cdef double[::1] phi = phi_arr
    cdef double[::1] nm2 = np.empty(nf, dtype=np.float64)
    cdef cplx[::1] gv = np.empty(nv, dtype=np.complex128)
    cdef cplx[::1] gm = np.empty(ne, dtype=np.complex128)
    with nogil:
        _moment(y, AV, AE, nv, ne, bounds, weights, av, am, phi, nm2)
        _gradient(y, nv, ne, bounds, av, am, phi, nm2, gv, gm)
        for k in range(d):
            pn += phi[k] * phi[k]
            for i in range(nv):
                for j in range(nv):
                    a = abs(AV[k, i, j])
                    if a > amax:
                        amax = a
            for i in range(ne):
                for j in range(ne):
                    a = abs(AE[k, i, j])
                    if a > amax:
                        amax = a
        for i in range(nv):
            gn += gv[i].real * gv[i].real + gv[i].imag * gv[i].imag
            vn += y[2 * i] * y[2 * i] + y[2 * i + 1] * y[2 * i + 1]
        for q in range(nf):
            gmn = 0.0
            for i in range(bounds[q], bounds[q + 1]):
                gmn += gm[i].real * gm[i].real + gm[i].imag * gm[i].imag
            gsum += 2.0 * weights[q] * gmn / nm2[q]
            wsum += weights[q]
    pn = sqrt(pn)
    gn = sqrt(gn + gsum)
    scale = amax * (0.5 * vn + wsum) * max(nv, ne, 1)
    return phi_arr, 0.5 * pn * pn, pn, gn, scale
