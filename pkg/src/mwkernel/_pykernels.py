"""Pure-Python (numpy) implementations of the hot kernels.

Every function here has a twin with the same signature in ``_ckernels.pyx``.
``mwkernel._backend`` picks the compiled one when it is importable.
"""
import itertools
import math

import numpy as np

# Panel layout for the log-substituted middle range of the Whittaker
# representation integral; widths grow geometrically up to this cap.
LOG_PANEL_CAP = 4.0
# Split points of the tail after the substitution tau = (1 + s) / x.
TAIL_SPLITS = (2.0, 8.0)


def lu_det(m):
    """Determinant by Gaussian elimination with partial pivoting."""
    a = np.array(m, dtype=float, copy=True)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise ValueError("lu_det needs a square matrix")
    det = 1.0
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        piv = a[p, k]
        if piv == 0.0:
            return 0.0
        if p != k:
            a[[k, p]] = a[[p, k]]
            det = -det
        det *= piv
        if k + 1 < n:
            f = a[k + 1:, k] / piv
            a[k + 1:, k + 1:] -= np.outer(f, a[k, k + 1:])
    return float(det)


def mute_sum(N, w, r_tmpl, s_tmpl):
    """Sum of prod_i w[s_i, r_i] * det[N[r_i, s_j]] over all mute slots.

    ``r_tmpl``/``s_tmpl`` hold a grid index for pinned slots and -1 for
    mute slots; a mute r-slot runs over every row of ``N``, a mute s-slot
    over every column.
    """
    N = np.asarray(N, dtype=float)
    w = np.asarray(w, dtype=float)
    r_tmpl = np.asarray(r_tmpl, dtype=np.int64)
    s_tmpl = np.asarray(s_tmpl, dtype=np.int64)
    d = r_tmpl.shape[0]
    P, Q = N.shape
    r_mute = np.flatnonzero(r_tmpl < 0)
    s_mute = np.flatnonzero(s_tmpl < 0)
    ranges = [range(P)] * len(r_mute) + [range(Q)] * len(s_mute)
    combos = list(itertools.product(*ranges))
    assign = np.array(combos, dtype=np.int64).reshape(len(combos), len(ranges))
    n_assign = assign.shape[0]
    r = np.broadcast_to(r_tmpl, (n_assign, d)).copy()
    s = np.broadcast_to(s_tmpl, (n_assign, d)).copy()
    r[:, r_mute] = assign[:, : len(r_mute)]
    s[:, s_mute] = assign[:, len(r_mute):]
    prod_w = np.prod(w[s, r], axis=1)
    sub = N[r[:, :, None], s[:, None, :]]
    return float(np.dot(prod_w, np.linalg.det(sub)))


def _log_panels(upper):
    edges = [0.0]
    width = 1.0
    while edges[-1] < upper:
        edges.append(min(edges[-1] + width, upper))
        width = min(2.0 * width, LOG_PANEL_CAP)
    return edges


def repr_integral(a, bp, x, jac_t, jac_w, gl_t, gl_w, lag_t, lag_w):
    """int_0^inf tau^(a-1) (1+tau)^bp exp(-x tau) dtau for each x > 0.

    Three pieces: Gauss-Jacobi (weight tau^(a-1)) on [0, min(1, 1/x)],
    log-substituted Gauss-Legendre panels on [1, 1/x] when x < 1, and the
    tail tau > 1/x mapped by tau = (1 + s)/x onto Legendre panels plus a
    shifted Gauss-Laguerre rule.
    """
    x = np.asarray(x, dtype=float)
    c = np.minimum(1.0, 1.0 / x)
    tau = c[:, None] * (1.0 + jac_t[None, :]) * 0.5
    j0 = (0.5 * c) ** a * np.sum(jac_w * (1.0 + tau) ** bp * np.exp(-x[:, None] * tau), axis=1)

    j1 = np.zeros_like(x)
    small = x < 1.0
    if np.any(small):
        xs = x[small]
        upper = np.log(1.0 / xs)
        edges = _log_panels(float(upper.max()))
        acc = np.zeros_like(xs)
        for lo, hi in zip(edges[:-1], edges[1:]):
            hi_eff = np.minimum(hi, upper)
            live = hi_eff > lo
            if not np.any(live):
                continue
            half = 0.5 * (hi_eff[live] - lo)
            u = lo + half[:, None] * (1.0 + gl_t[None, :])
            eu = np.exp(u)
            f = np.exp(a * u) * (1.0 + eu) ** bp * np.exp(-xs[live, None] * eu)
            acc[live] += half * np.sum(gl_w * f, axis=1)
        j1[small] = acc

    x2 = x[:, None]
    tail = np.zeros_like(x)
    lo = 0.0
    for hi in TAIL_SPLITS:
        half = 0.5 * (hi - lo)
        s = lo + half * (1.0 + gl_t)
        f = (1.0 + s) ** (a - 1.0) * (x2 + 1.0 + s) ** bp * np.exp(-s)
        tail += half * np.sum(gl_w * f, axis=1)
        lo = hi
    s = lo + lag_t
    f = (1.0 + s) ** (a - 1.0) * (x2 + 1.0 + s) ** bp
    tail += math.exp(-lo) * np.sum(lag_w * f, axis=1)
    j2 = math.exp(-1.0) * x ** (-a - bp) * tail
    return j0 + j1 + j2
