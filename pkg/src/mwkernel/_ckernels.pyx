# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; same signatures as ``_pykernels``."""
import numpy as np

from libc.math cimport exp, log, pow, fabs
from libc.stdlib cimport malloc, free

cdef double LOG_PANEL_CAP = 4.0


cdef double _det_inplace(double* a, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j, k, p
    cdef double det = 1.0, piv, f, tmp, best
    for k in range(n):
        p = k
        best = fabs(a[k * n + k])
        for i in range(k + 1, n):
            if fabs(a[i * n + k]) > best:
                best = fabs(a[i * n + k])
                p = i
        piv = a[p * n + k]
        if piv == 0.0:
            return 0.0
        if p != k:
            for j in range(n):
                tmp = a[k * n + j]
                a[k * n + j] = a[p * n + j]
                a[p * n + j] = tmp
            det = -det
        det *= piv
        for i in range(k + 1, n):
            f = a[i * n + k] / piv
            if f != 0.0:
                for j in range(k + 1, n):
                    a[i * n + j] -= f * a[k * n + j]
    return det


def lu_det(m):
    cdef const double[:, ::1] src = np.ascontiguousarray(m, dtype=np.float64)
    cdef Py_ssize_t n = src.shape[0]
    if src.shape[1] != n:
        raise ValueError("lu_det needs a square matrix")
    if n == 0:
        return 1.0
    cdef double* a = <double*> malloc(n * n * sizeof(double))
    cdef Py_ssize_t i, j
    cdef double out
    for i in range(n):
        for j in range(n):
            a[i * n + j] = src[i, j]
    out = _det_inplace(a, n)
    free(a)
    return out


def mute_sum(N, w, r_tmpl, s_tmpl):
    cdef const double[:, ::1] Nv = np.ascontiguousarray(N, dtype=np.float64)
    cdef const double[:, ::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef const long long[::1] rt = np.ascontiguousarray(r_tmpl, dtype=np.int64)
    cdef const long long[::1] st = np.ascontiguousarray(s_tmpl, dtype=np.int64)
    cdef Py_ssize_t d = rt.shape[0]
    cdef Py_ssize_t P = Nv.shape[0], Q = Nv.shape[1]
    cdef Py_ssize_t i, j, k, n_mute = 0
    cdef long long* r = <long long*> malloc(d * sizeof(long long))
    cdef long long* s = <long long*> malloc(d * sizeof(long long))
    # mute slots: positions 0..d-1 are r-slots, d..2d-1 are s-slots
    cdef Py_ssize_t* slot = <Py_ssize_t*> malloc(2 * d * sizeof(Py_ssize_t))
    cdef long long* limit = <long long*> malloc(2 * d * sizeof(long long))
    cdef double* a = <double*> malloc((d * d + 1) * sizeof(double))
    cdef double total = 0.0, pw
    cdef bint done = False
    for i in range(d):
        r[i] = rt[i]
        s[i] = st[i]
        if rt[i] < 0:
            slot[n_mute] = i
            limit[n_mute] = P
            r[i] = 0
            n_mute += 1
    for i in range(d):
        if st[i] < 0:
            slot[n_mute] = d + i
            limit[n_mute] = Q
            s[i] = 0
            n_mute += 1
    with nogil:
        while not done:
            pw = 1.0
            for i in range(d):
                pw *= wv[s[i], r[i]]
            if pw != 0.0:
                for i in range(d):
                    for j in range(d):
                        a[i * d + j] = Nv[r[i], s[j]]
                total += pw * _det_inplace(a, d)
            # odometer step over the mute slots
            done = True
            for k in range(n_mute):
                if slot[k] < d:
                    r[slot[k]] += 1
                    if r[slot[k]] < limit[k]:
                        done = False
                        break
                    r[slot[k]] = 0
                else:
                    s[slot[k] - d] += 1
                    if s[slot[k] - d] < limit[k]:
                        done = False
                        break
                    s[slot[k] - d] = 0
    free(r)
    free(s)
    free(slot)
    free(limit)
    free(a)
    return total


def repr_integral(double a, double bp, x, jac_t, jac_w, gl_t, gl_w, lag_t, lag_w):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] jt = np.ascontiguousarray(jac_t, dtype=np.float64)
    cdef const double[::1] jw = np.ascontiguousarray(jac_w, dtype=np.float64)
    cdef const double[::1] gt = np.ascontiguousarray(gl_t, dtype=np.float64)
    cdef const double[::1] gw = np.ascontiguousarray(gl_w, dtype=np.float64)
    cdef const double[::1] lt = np.ascontiguousarray(lag_t, dtype=np.float64)
    cdef const double[::1] lw = np.ascontiguousarray(lag_w, dtype=np.float64)
    cdef Py_ssize_t m = xv.shape[0], nj = jt.shape[0], ng = gt.shape[0], nl = lt.shape[0]
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i, k, lo_i, nt = 2 * ng
    cdef double xi, c, tau, j0, j1, j2, upper, lo, hi, width, half, u, eu, acc
    cdef double splits[3]
    splits[0] = 0.0
    splits[1] = 2.0
    splits[2] = 8.0
    # tail nodes and the x-independent part of their weights
    cdef double* ts = <double*> malloc((nt + nl) * sizeof(double))
    cdef double* tw = <double*> malloc((nt + nl) * sizeof(double))
    if ts == NULL or tw == NULL:
        free(ts)
        free(tw)
        raise MemoryError()
    for lo_i in range(2):
        lo = splits[lo_i]
        half = 0.5 * (splits[lo_i + 1] - lo)
        for k in range(ng):
            ts[lo_i * ng + k] = lo + half * (1.0 + gt[k])
            tw[lo_i * ng + k] = half * gw[k] * pow(1.0 + ts[lo_i * ng + k], a - 1.0) * exp(-ts[lo_i * ng + k])
    for k in range(nl):
        ts[nt + k] = 8.0 + lt[k]
        tw[nt + k] = exp(-8.0) * lw[k] * pow(1.0 + ts[nt + k], a - 1.0)
    try:
        with nogil:
            for i in range(m):
                xi = xv[i]
                c = 1.0 / xi
                if c > 1.0:
                    c = 1.0
                acc = 0.0
                for k in range(nj):
                    tau = 0.5 * c * (1.0 + jt[k])
                    acc += jw[k] * exp(bp * log(1.0 + tau) - xi * tau)
                j0 = pow(0.5 * c, a) * acc

                j1 = 0.0
                if xi < 1.0:
                    upper = log(1.0 / xi)
                    lo = 0.0
                    width = 1.0
                    while lo < upper:
                        hi = lo + width
                        if hi > upper:
                            hi = upper
                        half = 0.5 * (hi - lo)
                        acc = 0.0
                        for k in range(ng):
                            u = lo + half * (1.0 + gt[k])
                            eu = exp(u)
                            acc += gw[k] * exp(a * u + bp * log(1.0 + eu) - xi * eu)
                        j1 += half * acc
                        lo = hi
                        width = 2.0 * width
                        if width > LOG_PANEL_CAP:
                            width = LOG_PANEL_CAP

                acc = 0.0
                for k in range(nt + nl):
                    acc += tw[k] * exp(bp * log(xi + 1.0 + ts[k]))
                j2 = exp(-1.0) * pow(xi, -a - bp) * acc
                ov[i] = j0 + j1 + j2
    finally:
        free(ts)
        free(tw)
    return out
