"""Scalar special functions: gamma, Pochhammer, the power density phi_a and
the Whittaker function W_{kappa,mu} with its derivative.

W is evaluated from its Laplace-type integral representation

    W_{k,m}(x) = exp(-x/2) x^(m+1/2) / Gamma(a) * int_0^inf tau^(a-1) (1+tau)^(m+k-1/2) exp(-x tau) dtau,

with ``a = 1/2 + m - k``.  The representation needs ``a > 0``; using the
symmetry ``m -> -m`` we always take ``m >= 0`` (largest ``a``), and when that
is still not enough we start from indices ``k - n - 1, k - n`` where it does
converge and climb with the three-term recurrence in ``k``.
"""
from __future__ import annotations

import functools
import math
from typing import NamedTuple

import numpy as np
from scipy.special import eval_genlaguerre, roots_jacobi, roots_laguerre

from . import _backend

__all__ = [
    "PoleError",
    "DomainError",
    "WhittakerOverflowError",
    "WhittakerArgs",
    "gamma",
    "pochhammer",
    "phi",
    "whittaker_w",
    "whittaker_w_deriv",
    "moment_identity_residual",
]

_JACOBI_NODES = 32
_LEGENDRE_NODES = 24
_LAGUERRE_NODES = 40
_GL_T, _GL_W = np.polynomial.legendre.leggauss(_LEGENDRE_NODES)
_LAG_T, _LAG_W = roots_laguerre(_LAGUERRE_NODES)
# a within this distance of a non-positive integer is the terminating case
_POLY_TOL = 1e-13


class PoleError(ValueError):
    """Gamma evaluated at a non-positive integer."""


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


class WhittakerOverflowError(OverflowError):
    """W or an intermediate exceeded the double range."""


class WhittakerArgs(NamedTuple):
    kappa: float
    mu: float
    x: float

    def validate(self) -> "WhittakerArgs":
        if not all(math.isfinite(v) for v in self):
            raise DomainError(f"non-finite Whittaker argument {tuple(self)}")
        if self.x <= 0:
            raise DomainError(f"Whittaker argument must satisfy x > 0, got x={self.x}")
        return self


def gamma(x: float) -> float:
    """Euler gamma function.

    Negative arguments go through the reflection formula so that the
    evaluation near poles keeps full relative accuracy.
    """
    x = float(x)
    if x <= 0 and x == math.floor(x):
        raise PoleError(f"gamma has a pole at {x}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * math.gamma(1.0 - x))
    return math.gamma(x)


def pochhammer(a: float, m: int) -> float:
    """Rising factorial (a)_m = a (a+1) ... (a+m-1), as a direct product."""
    if m < 0:
        raise ValueError("pochhammer needs m >= 0")
    out = 1.0
    for k in range(m):
        out *= a + k
    return out


def phi(a: float, x):
    """x^a / Gamma(a+1) on x > 0, zero elsewhere (requires a > -1)."""
    if not a > -1:
        raise DomainError(f"phi_a needs a > -1, got a={a}")
    x = np.asarray(x, dtype=float)
    pos = np.where(x > 0, x, 1.0)
    out = np.where(x > 0, pos**a / gamma(a + 1.0), 0.0)
    return float(out) if out.ndim == 0 else out


@functools.lru_cache(maxsize=512)
def _jacobi_rule(a: float):
    t, w = roots_jacobi(_JACOBI_NODES, 0.0, a - 1.0)
    return np.ascontiguousarray(t), np.ascontiguousarray(w)


def _w_convergent(kappa: float, mu: float, x: np.ndarray) -> np.ndarray:
    # mu >= 0 and a = 1/2 + mu - kappa > 0 here
    a = 0.5 + mu - kappa
    bp = mu + kappa - 0.5
    jt, jw = _jacobi_rule(a)
    integral = _backend.repr_integral(a, bp, x, jt, jw, _GL_T, _GL_W, _LAG_T, _LAG_W)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        return np.exp(-0.5 * x + (mu + 0.5) * np.log(x) - math.lgamma(a)) * integral


def _w_terminating(n: int, mu: float, x: np.ndarray) -> np.ndarray:
    # a = -n: W is exp(-x/2) x^(mu+1/2) times a generalized Laguerre polynomial
    with np.errstate(over="ignore", under="ignore"):
        return (
            np.exp(-0.5 * x + (mu + 0.5) * np.log(x))
            * (-1) ** n
            * math.factorial(n)
            * eval_genlaguerre(n, 2.0 * mu, x)
        )


def _whittaker_array(kappa: float, mu: float, x: np.ndarray) -> np.ndarray:
    mu = abs(mu)
    a = 0.5 + mu - kappa
    if a > 0:
        out = _w_convergent(kappa, mu, x)
    elif abs(a - round(a)) < _POLY_TOL:
        out = _w_terminating(int(round(-a)), mu, x)
    else:
        n = int(math.floor(-a)) + 1
        k = kappa - n
        w_prev = _w_convergent(k - 1.0, mu, x)
        w_cur = _w_convergent(k, mu, x)
        for _ in range(n):
            w_prev, w_cur = w_cur, (x - 2.0 * k) * w_cur - ((k - 0.5) ** 2 - mu * mu) * w_prev
            k += 1.0
        out = w_cur
    if not np.all(np.isfinite(out)):
        raise WhittakerOverflowError(
            f"W_{{{kappa},{mu}}} overflowed the double range on part of the input"
        )
    return out


def _as_positive_array(x):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("Whittaker argument must be finite")
    if not np.all(arr > 0):
        raise DomainError("Whittaker argument must satisfy x > 0")
    return arr


def whittaker_w(kappa: float, mu: float, x):
    """Whittaker function W_{kappa,mu}(x) for real indices and x > 0.

    ``x`` may be a scalar or an array; the result has the same shape.
    Accuracy is about 1e-12 relative for kappa, mu in [-3, 3] and
    x in [1e-3, 50], except next to the real zeros of W.
    """
    arr = _as_positive_array(x)
    flat = np.atleast_1d(arr).ravel()
    out = _whittaker_array(float(kappa), float(mu), flat).reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


def whittaker_w_deriv(kappa: float, mu: float, x):
    """d/dx W_{kappa,mu}(x), from x W' = (x/2 - kappa) W_{kappa} - W_{kappa+1}."""
    arr = _as_positive_array(x)
    flat = np.atleast_1d(arr).ravel()
    w0 = _whittaker_array(float(kappa), float(mu), flat)
    w1 = _whittaker_array(float(kappa) + 1.0, float(mu), flat)
    out = (((0.5 * flat - kappa) * w0 - w1) / flat).reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


def moment_identity_residual(a: float, b: float, c: float, spec=None) -> float:
    """Relative residual of the Mellin-type moment identity for W.

    Compares the quadrature of
    int_0^inf x^(b-c/2-1) exp(-x/2) W_{c/2-a,(c-1)/2}(x) dx
    with Gamma(b) Gamma(b-c+1) / Gamma(a+b-c+1).
    """
    from .numerics import QuadratureSpec, integrate_1d

    if not (b > 0 and b - c + 1 > 0):
        raise DomainError(f"moment integral diverges unless b > 0 and b - c + 1 > 0 (b={b}, c={c})")
    spec = spec or QuadratureSpec(rel_tol=1e-11, abs_tol=0.0)
    kappa, mu = 0.5 * c - a, 0.5 * (c - 1.0)
    p = b - 0.5 * c - 1.0

    def f(x):
        return x**p * np.exp(-0.5 * x) * _whittaker_array(kappa, mu, x)

    lhs = integrate_1d(f, 0.0, math.inf, spec=spec, scale=2.0).value
    rhs = gamma(b) * gamma(b - c + 1.0) / gamma(a + b - c + 1.0)
    return abs(lhs - rhs) / abs(rhs)
