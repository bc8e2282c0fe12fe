"""The matrix Whittaker kernel on the two half-lines and its correlation functions.

Points of the phase space are nonzero reals; a point ``u < 0`` lives on the
negative copy and enters every formula through ``|u|``.  The four blocks are

    K++(x, y) = (A+(x) B+(y) - B+(x) A+(y)) / ((x - y) G(z) G(z'))
    K+-(x, y) = c (A+(x) A-(y) + t B+(x) B-(y)) / (x + y)
    K-+(x, y) = -c (A+(y) A-(x) + t B+(y) B-(x)) / (x + y)
    K--(x, y) = (A-(x) B-(y) - B-(x) A-(y)) / ((x - y) G(-z) G(-z'))

with ``G`` the gamma function, ``c = sqrt(sin(pi z) sin(pi z')) / pi``,
``t = z z'`` and ``A+-, B+-`` scaled Whittaker functions (see :func:`a_plus`),
so that ``K(x, -y) = K+-(x, y)`` etc. for ``x, y > 0``.

The conjugated kernel ``N~`` (:func:`ntilde`) is evaluated from its own
closed forms; it differs from ``K`` by a diagonal gauge and therefore has
the same determinants.
"""
from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import specfun
from .numerics import (
    QuadratureError,
    QuadratureSpec,
    det,
    graded_half_line_rule,
    integrate_1d,
)

__all__ = [
    "ParameterError",
    "UnsupportedModeError",
    "KernelParams",
    "validate_params",
    "SignedPoint",
    "Configuration",
    "a_plus",
    "b_plus",
    "a_minus",
    "b_minus",
    "k_pp",
    "k_pm",
    "k_mp",
    "k_mm",
    "kernel",
    "kernel_diag",
    "kernel_matrix",
    "correlation",
    "rho1_profile",
    "n_pp",
    "n_pm",
    "n_mp",
    "n_mm",
    "ntilde",
    "ntilde_matrix",
    "gauge",
    "StieltjesReport",
    "verify_stieltjes_consistency",
    "JSymmetryReport",
    "verify_j_symmetry",
]

# relative offset below which same-sign pairs use the diagonal formula
NEAR_DIAGONAL = 1e-6


class ParameterError(ValueError):
    """(z, z') violates the real-parameter condition."""


class UnsupportedModeError(NotImplementedError):
    """Complex conjugate parameters (z' = conj(z)) are not implemented."""


@dataclass(frozen=True)
class KernelParams:
    """Validated pair (z, z') with m < z, z' < m + 1; build via :func:`validate_params`."""

    z: float
    zp: float
    t: float
    m: int

    @property
    def s(self) -> float:
        """Half-sum (z + z') / 2, the shared index shift."""
        return 0.5 * (self.z + self.zp)

    @property
    def mu(self) -> float:
        return 0.5 * (self.z - self.zp)

    @property
    def gamma_pp(self) -> float:
        """1 / (Gamma(z) Gamma(z'))."""
        return 1.0 / (specfun.gamma(self.z) * specfun.gamma(self.zp))

    @property
    def gamma_mm(self) -> float:
        """1 / (Gamma(-z) Gamma(-z'))."""
        return 1.0 / (specfun.gamma(-self.z) * specfun.gamma(-self.zp))

    @property
    def sin_prod(self) -> float:
        return math.sin(math.pi * self.z) * math.sin(math.pi * self.zp)

    @property
    def off_coeff(self) -> float:
        """sqrt(sin(pi z) sin(pi z')) / pi."""
        return math.sqrt(self.sin_prod) / math.pi


def validate_params(z, zp) -> KernelParams:
    """Check the real-parameter condition and derive ``t = z z'`` and ``m``.

    Examples
    --------
    >>> p = validate_params(-0.3, -0.6)
    >>> p.m, round(p.t, 12)
    (-1, 0.18)
    """
    for name, v in (("z", z), ("zp", zp)):
        if isinstance(v, numbers.Complex) and not isinstance(v, numbers.Real):
            if complex(v).imag != 0:
                raise UnsupportedModeError(
                    f"complex parameter {name}={v!r}: the conjugate-pair case is not supported"
                )
            raise ParameterError(f"{name} must be given as a real number, got {v!r}")
        if not isinstance(v, numbers.Real) or not math.isfinite(float(v)):
            raise ParameterError(f"{name} must be a finite real number, got {v!r}")
    z, zp = float(z), float(zp)
    for name, v in (("z", z), ("zp", zp)):
        if v == math.floor(v):
            raise ParameterError(f"{name}={v} is an integer; the kernel needs non-integer z, z'")
    m = math.floor(z)
    if math.floor(zp) != m:
        raise ParameterError(
            f"z={z} and zp={zp} lie in different unit intervals; need m < z, z' < m+1"
        )
    p = KernelParams(z, zp, z * zp, int(m))
    if not p.sin_prod > 0:  # guaranteed by the interval condition, kept as a guard
        raise ParameterError("sin(pi z) sin(pi z') must be positive")
    return p


@dataclass(frozen=True)
class SignedPoint:
    """A point of the phase space: nonzero real, sign selects the half-line."""

    value: float

    def __post_init__(self):
        v = float(self.value)
        if v == 0 or not math.isfinite(v):
            raise ValueError(f"points must be finite and nonzero, got {self.value!r}")
        object.__setattr__(self, "value", v)

    @property
    def positive(self) -> bool:
        return self.value > 0

    def __float__(self):
        return self.value


class Configuration(tuple):
    """Ordered finite list of :class:`SignedPoint` (duplicates allowed)."""

    def __new__(cls, points: Iterable = ()):
        return super().__new__(cls, (p if isinstance(p, SignedPoint) else SignedPoint(p) for p in points))

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self], dtype=float)


def _value(u) -> float:
    return u.value if isinstance(u, SignedPoint) else SignedPoint(u).value


# ---------------------------------------------------------------------------
# scaled Whittaker functions


def _scaled_w(kappa, mu, x):
    x = np.asarray(x, dtype=float)
    return specfun.whittaker_w(kappa, mu, x) / np.sqrt(x)


def a_plus(p: KernelParams, x):
    """x^(-1/2) W_{s+1/2, mu}(x) with s = (z+z')/2, mu = (z-z')/2."""
    return _scaled_w(p.s + 0.5, p.mu, x)


def b_plus(p: KernelParams, x):
    """x^(-1/2) W_{s-1/2, mu}(x)."""
    return _scaled_w(p.s - 0.5, p.mu, x)


def a_minus(p: KernelParams, x):
    """x^(-1/2) W_{-s+1/2, mu}(x)."""
    return _scaled_w(-p.s + 0.5, p.mu, x)


def b_minus(p: KernelParams, x):
    """x^(-1/2) W_{-s-1/2, mu}(x)."""
    return _scaled_w(-p.s - 0.5, p.mu, x)


def _wronskian_diag(kappa_a, kappa_b, mu, x):
    # A'B - AB' for A = x^(-1/2) W_a, B = x^(-1/2) W_b; the x^(-3/2) parts cancel
    wa = specfun.whittaker_w(kappa_a, mu, x)
    wb = specfun.whittaker_w(kappa_b, mu, x)
    da = specfun.whittaker_w_deriv(kappa_a, mu, x)
    db = specfun.whittaker_w_deriv(kappa_b, mu, x)
    return (da * wb - wa * db) / x


def _diag_block(p: KernelParams, x, plus: bool):
    x = np.asarray(x, dtype=float)
    if plus:
        return p.gamma_pp * _wronskian_diag(p.s + 0.5, p.s - 0.5, p.mu, x)
    return p.gamma_mm * _wronskian_diag(-p.s + 0.5, -p.s - 0.5, p.mu, x)


def _same_sign_block(p: KernelParams, x, y, plus: bool):
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    shape = x.shape
    x, y = x.ravel(), y.ravel()
    out = np.empty(x.shape)
    near = np.abs(x - y) < NEAR_DIAGONAL * np.maximum(x, y)
    if np.any(near):
        # K is symmetric, so the midpoint diagonal value is second-order accurate
        out[near] = _diag_block(p, 0.5 * (x[near] + y[near]), plus)
    far = ~near
    if np.any(far):
        xf, yf = x[far], y[far]
        if plus:
            fa, fb, g = a_plus, b_plus, p.gamma_pp
        else:
            fa, fb, g = a_minus, b_minus, p.gamma_mm
        ax, bx, ay, by = fa(p, xf), fb(p, xf), fa(p, yf), fb(p, yf)
        out[far] = g * (ax * by - bx * ay) / (xf - yf)
    out = out.reshape(shape)
    return float(out) if out.ndim == 0 else out


def k_pp(p: KernelParams, x, y):
    """K++(x, y) for x, y > 0 (vectorized, broadcasting)."""
    return _same_sign_block(p, x, y, plus=True)


def k_mm(p: KernelParams, x, y):
    """K--(x, y) = K(-x, -y) for x, y > 0."""
    return _same_sign_block(p, x, y, plus=False)


def k_pm(p: KernelParams, x, y):
    """K+-(x, y) = K(x, -y) for x, y > 0."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = p.off_coeff * (a_plus(p, x) * a_minus(p, y) + p.t * b_plus(p, x) * b_minus(p, y)) / (x + y)
    return float(out) if np.ndim(out) == 0 else out


def k_mp(p: KernelParams, x, y):
    """K-+(x, y) = K(-x, y) for x, y > 0."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = -p.off_coeff * (a_plus(p, y) * a_minus(p, x) + p.t * b_plus(p, y) * b_minus(p, x)) / (x + y)
    return float(out) if np.ndim(out) == 0 else out


_BLOCKS = {(True, True): k_pp, (True, False): k_pm, (False, True): k_mp, (False, False): k_mm}


def kernel(p: KernelParams, x, y) -> float:
    """K(x, y) for signed points, dispatching on the sign pair."""
    xv, yv = _value(x), _value(y)
    return float(_BLOCKS[(xv > 0, yv > 0)](p, abs(xv), abs(yv)))


def kernel_diag(p: KernelParams, x) -> float:
    """K(x, x), the one-point correlation function, via the Wronskian-type limit."""
    xv = _value(x)
    return float(_diag_block(p, abs(xv), plus=xv > 0))


def _block_matrix(p, values, blocks):
    values = np.asarray(values, dtype=float)
    n = values.size
    out = np.empty((n, n))
    pos = values > 0
    ax = np.abs(values)
    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    for (sx, sy), fn in blocks.items():
        mask = (pos[ii] == sx) & (pos[jj] == sy)
        if np.any(mask):
            out[mask] = fn(p, ax[ii[mask]], ax[jj[mask]])
    return out


def kernel_matrix(p: KernelParams, points) -> np.ndarray:
    """[K(x_i, x_j)] for a sequence of signed points."""
    return _block_matrix(p, _values(points), _BLOCKS)


def _values(points) -> np.ndarray:
    return np.array([_value(u) for u in points], dtype=float)


def correlation(p: KernelParams, config) -> float:
    """n-point correlation function det[K(x_i, x_j)] (1 for the empty configuration)."""
    values = _values(config)
    if values.size == 0:
        return 1.0
    return det(kernel_matrix(p, values))


def rho1_profile(p: KernelParams, xs) -> np.ndarray:
    """Vectorized one-point function over an array of nonzero reals."""
    xs = np.asarray(xs, dtype=float)
    if np.any(xs == 0) or not np.all(np.isfinite(xs)):
        raise ValueError("profile points must be finite and nonzero")
    out = np.empty(xs.shape)
    pos = xs > 0
    if np.any(pos):
        out[pos] = _diag_block(p, xs[pos], plus=True)
    if np.any(~pos):
        out[~pos] = _diag_block(p, -xs[~pos], plus=False)
    return out


# ---------------------------------------------------------------------------
# conjugated kernel N~ from its closed forms


def _prefix(p, x, y, sign_exp):
    # (x/y)^s exp(sign_exp * (x, y) / 2) (xy)^(-1/2); sign_exp gives the
    # exponent signs for x and y
    ex, ey = sign_exp
    return np.exp(p.s * (np.log(x) - np.log(y)) + 0.5 * (ex * x + ey * y)) / np.sqrt(x * y)


def _w(kappa, mu, x):
    return specfun.whittaker_w(kappa, mu, x)


def _n_same(p, x, y, plus):
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    shape = x.shape
    x, y = x.ravel(), y.ravel()
    out = np.empty(x.shape)
    near = np.abs(x - y) < NEAR_DIAGONAL * np.maximum(x, y)
    if np.any(near):
        xn, yn = x[near], y[near]
        out[near] = _gauge_ratio(p, xn, yn, plus, plus) * _same_sign_block(p, xn, yn, plus)
    far = ~near
    if np.any(far):
        xf, yf = x[far], y[far]
        s, mu = p.s, p.mu
        if plus:
            hi, lo, g, signs = s + 0.5, s - 0.5, p.gamma_pp, (-1.0, 1.0)
        else:
            hi, lo, g, signs = -s + 0.5, -s - 0.5, p.gamma_mm, (1.0, -1.0)
        num = _w(hi, mu, xf) * _w(lo, mu, yf) - _w(lo, mu, xf) * _w(hi, mu, yf)
        out[far] = g * _prefix(p, xf, yf, signs) * num / (xf - yf)
    out = out.reshape(shape)
    return float(out) if out.ndim == 0 else out


def n_pp(p: KernelParams, x, y):
    """N~(x, y) for x, y > 0."""
    return _n_same(p, x, y, plus=True)


def n_mm(p: KernelParams, x, y):
    """N~(-x, -y) for x, y > 0."""
    return _n_same(p, x, y, plus=False)


def n_pm(p: KernelParams, x, y):
    """N~(x, -y) for x, y > 0; equals the discrete-side kernel N(x, -y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s, mu, t = p.s, p.mu, p.t
    num = _w(s + 0.5, mu, x) * _w(-s + 0.5, mu, y) + t * _w(s - 0.5, mu, x) * _w(-s - 0.5, mu, y)
    out = p.sin_prod / math.pi**2 * _prefix(p, x, y, (-1.0, -1.0)) * num / (x + y)
    return float(out) if np.ndim(out) == 0 else out


def n_mp(p: KernelParams, x, y):
    """N~(-x, y) for x, y > 0."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s, mu, t = p.s, p.mu, p.t
    num = _w(-s + 0.5, mu, x) * _w(s + 0.5, mu, y) + t * _w(-s - 0.5, mu, x) * _w(s - 0.5, mu, y)
    out = -_prefix(p, x, y, (1.0, 1.0)) * num / (x + y)
    return float(out) if np.ndim(out) == 0 else out


_N_BLOCKS = {(True, True): n_pp, (True, False): n_pm, (False, True): n_mp, (False, False): n_mm}


def ntilde(p: KernelParams, x, y) -> float:
    """N~(x, y) for signed points."""
    xv, yv = _value(x), _value(y)
    return float(_N_BLOCKS[(xv > 0, yv > 0)](p, abs(xv), abs(yv)))


def ntilde_matrix(p: KernelParams, points) -> np.ndarray:
    return _block_matrix(p, _values(points), _N_BLOCKS)


def gauge(p: KernelParams, u):
    """Diagonal gauge G with N~(x, y) = G(x) / G(y) K(x, y).

    ``G(u) = |u|^s exp(-u/2)`` times ``pi / sqrt(sin(pi z) sin(pi z'))`` on
    the negative half-line; the constant makes the off-diagonal blocks match
    and cancels in every determinant.
    """
    u = np.asarray(u, dtype=float)
    base = np.exp(p.s * np.log(np.abs(u)) - 0.5 * u)
    out = np.where(u > 0, base, base / p.off_coeff)
    return float(out) if out.ndim == 0 else out


def _gauge_ratio(p, x, y, x_pos, y_pos):
    gx = gauge(p, x if x_pos else -np.asarray(x))
    gy = gauge(p, y if y_pos else -np.asarray(y))
    return gx / gy


# ---------------------------------------------------------------------------
# verification reports


class StieltjesReport(NamedTuple):
    """Relative residuals of the three integral relations among the N~ blocks."""

    pp: float
    mm: float
    mp: float
    pp_value: float
    mm_value: float
    mp_value: float

    @property
    def max_residual(self) -> float:
        return max(self.pp, self.mm, self.mp)


def _check_stieltjes_range(p):
    if p.m != -1:
        raise ParameterError("the integral relations converge only for -1 < z, z' < 0")


def _quad(name, f, spec, scale=1.0):
    try:
        return integrate_1d(f, 0.0, math.inf, spec=spec, scale=scale)
    except QuadratureError as exc:
        raise QuadratureError(f"relation {name}: {exc}", exc.value, exc.error) from exc


def verify_stieltjes_consistency(
    p: KernelParams, x: float, y: float, spec: QuadratureSpec | None = None
) -> StieltjesReport:
    """Check the closed forms of the N~ blocks against their integral definitions.

    * ``N~(x, y) = int_0^inf N(x, -s) / (s + y) ds``
    * ``N~(-x, -y) = int_0^inf N(r, -y) / (r + x) dr``
    * ``N~(-x, y) = iint N(r, -s) / ((r + x)(s + y)) dr ds - 1 / (x + y)``

    where ``N(r, -s)`` is the closed-form block :func:`n_pm`.  The inner
    integral of the double integral uses a fixed graded rule (the integrand
    is a sum of products in ``s`` once ``r`` is fixed, up to the ``1/(r+s)``
    factor); its estimated error, from comparing two rule orders, is added
    to the outer adaptive estimate.  Non-convergence raises
    :class:`QuadratureError` naming the relation.
    """
    _check_stieltjes_range(p)
    spec = spec or QuadratureSpec()
    x, y = float(x), float(y)
    if not (x > 0 and y > 0):
        raise ValueError("x and y must be positive")

    pp_q = _quad("N~(x,y)", lambda s: n_pm(p, x, s) / (s + y), spec)
    mm_q = _quad("N~(-x,-y)", lambda r: n_pm(p, r, y) / (r + x), spec)
    pp_c, mm_c = n_pp(p, x, y), n_mm(p, x, y)

    # double integral: N(r,-s) = C (r/s)^s0 e^{-(r+s)/2} (rs)^{-1/2} [f1(r)g1(s) + t f2(r)g2(s)] / (r+s)
    s0, mu, t = p.s, p.mu, p.t
    inner = {}
    for order in (16, 24):
        nodes, weights = graded_half_line_rule(order=order)
        h = weights * np.exp(-s0 * np.log(nodes) - 0.5 * nodes) / np.sqrt(nodes) / (nodes + y)
        inner[order] = (nodes, h * _w(-s0 + 0.5, mu, nodes), h * _w(-s0 - 0.5, mu, nodes))
    inner_dev = [0.0]

    def outer(r):
        r = np.asarray(r, dtype=float)
        pre = np.exp(s0 * np.log(r) - 0.5 * r) / np.sqrt(r) / (r + x)
        f1, f2 = _w(s0 + 0.5, mu, r), t * _w(s0 - 0.5, mu, r)
        vals = {}
        for order, (nodes, g1, g2) in inner.items():
            denom = r[:, None] + nodes[None, :]
            vals[order] = f1 * ((g1 / denom).sum(axis=1)) + f2 * ((g2 / denom).sum(axis=1))
        scale_ = np.maximum(np.abs(vals[24]), 1e-300)
        inner_dev[0] = max(inner_dev[0], float(np.max(np.abs(vals[24] - vals[16]) / scale_)))
        return p.sin_prod / math.pi**2 * pre * vals[24]

    mp_q = _quad("N~(-x,y)", outer, spec)
    if inner_dev[0] > max(spec.rel_tol, 1e-12) * 10:
        raise QuadratureError(
            f"relation N~(-x,y): inner graded rule disagrees across orders ({inner_dev[0]:.3g})",
            mp_q.value,
            inner_dev[0] * abs(mp_q.value),
        )
    mp_c = n_mp(p, x, y)
    mp_val = mp_q.value - 1.0 / (x + y)

    def rel(a, b):
        return abs(a - b) / abs(b)

    return StieltjesReport(
        rel(pp_q.value, pp_c), rel(mm_q.value, mm_c), rel(mp_val, mp_c), pp_c, mm_c, mp_c
    )


class JSymmetryReport(NamedTuple):
    """Maximal absolute violations of the three J-symmetry relations."""

    pp: float
    mm: float
    pm: float
    n_pairs: int

    @property
    def max_violation(self) -> float:
        return max(self.pp, self.mm, self.pm)


def verify_j_symmetry(p: KernelParams, samples: Sequence[tuple[float, float]]) -> JSymmetryReport:
    """Evaluate K++(x,y) - K++(y,x), K--(x,y) - K--(y,x) and K+-(x,y) + K-+(y,x).

    ``samples`` is a list of positive pairs ``(x, y)``.
    """
    pairs = np.asarray(list(samples), dtype=float).reshape(-1, 2)
    if pairs.shape[0] == 0:
        return JSymmetryReport(0.0, 0.0, 0.0, 0)
    if not np.all(pairs > 0):
        raise ValueError("J-symmetry samples must be positive pairs")
    x, y = pairs[:, 0], pairs[:, 1]
    vpp = np.abs(k_pp(p, x, y) - k_pp(p, y, x))
    vmm = np.abs(k_mm(p, x, y) - k_mm(p, y, x))
    vpm = np.abs(k_pm(p, x, y) + k_mp(p, y, x))
    return JSymmetryReport(float(vpp.max()), float(vmm.max()), float(vpm.max()), pairs.shape[0])
