"""Quadrature, small dense linear algebra and a seeded random stream.

Matrices are plain 2-D numpy arrays (row-major, float64).
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import _backend

__all__ = [
    "QuadratureSpec",
    "QuadResult",
    "QuadratureError",
    "integrate_1d",
    "integrate_2d",
    "graded_half_line_rule",
    "det",
    "LDU",
    "DegeneratePairingError",
    "ldu_biorthogonalize",
    "sym_eigenvalues",
    "RngStream",
    "rng_stream",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for the adaptive integrators.

    ``max_subdivisions`` bounds the number of panel bisections.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be > 0, got {self.rel_tol}")
        if not self.abs_tol >= 0:
            raise ValueError(f"abs_tol must be >= 0, got {self.abs_tol}")
        if int(self.max_subdivisions) != self.max_subdivisions or self.max_subdivisions < 1:
            raise ValueError(f"max_subdivisions must be an integer >= 1, got {self.max_subdivisions}")


class QuadResult(NamedTuple):
    value: float
    error: float
    n_eval: int


class QuadratureError(ArithmeticError):
    """Adaptive quadrature gave up; carries the best estimate so far."""

    def __init__(self, message: str, value: float = math.nan, error: float = math.inf):
        super().__init__(message)
        self.value = value
        self.error = error


_G_LO_T, _G_LO_W = np.polynomial.legendre.leggauss(10)
_G_HI_T, _G_HI_W = np.polynomial.legendre.leggauss(21)
_NODES = np.concatenate([_G_LO_T, _G_HI_T])


def _half_line_map(f, start, scale):
    # tau = start - scale*log(u), u in (0, 1]; exponential decay in tau
    # becomes a power of u near u = 0.
    def g(u):
        return f(start - scale * np.log(u)) * (scale / u)

    return g


def _pieces(f, a, b, scale):
    if a > b:
        raise ValueError("integration domain needs a <= b")
    if math.isinf(a) and math.isinf(b):
        return _pieces(f, 0.0, math.inf, scale) + _pieces(lambda t: f(-t), 0.0, math.inf, scale)
    if math.isinf(a):
        return _pieces(lambda t: f(-t), -b, math.inf, scale)
    if math.isinf(b):
        return [(f, a, a + scale), (_half_line_map(f, a + scale, scale), 0.0, 1.0)]
    return [(f, a, b)]


def _eval_panel(g, lo, hi):
    c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
    vals = np.asarray(g(c + h * _NODES), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise QuadratureError(f"non-finite integrand value on [{lo}, {hi}]")
    coarse = h * float(np.dot(_G_LO_W, vals[:10]))
    fine = h * float(np.dot(_G_HI_W, vals[10:]))
    return fine, abs(fine - coarse)


def integrate_1d(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    spec: QuadratureSpec | None = None,
    scale: float = 1.0,
    points: Sequence[float] = (),
) -> QuadResult:
    """Adaptive Gauss-Legendre (10/21 pair) integration of a vectorized ``f``.

    Infinite endpoints are split off at distance ``scale`` and mapped to
    (0, 1] by an exponential substitution, so ``f`` should decay at least
    exponentially there.  ``points`` are extra breakpoints inside a finite
    domain.  Raises :class:`QuadratureError` when the tolerance is not met
    within ``spec.max_subdivisions`` bisections.
    """
    spec = spec or QuadratureSpec()
    if not scale > 0:
        raise ValueError("scale must be positive")
    pieces = []
    if points and not (math.isinf(a) or math.isinf(b)):
        edges = [a] + sorted(p for p in points if a < p < b) + [b]
        for lo, hi in zip(edges[:-1], edges[1:]):
            pieces.extend(_pieces(f, lo, hi, scale))
    else:
        pieces = _pieces(f, a, b, scale)

    heap = []
    n_eval = 0
    for idx, (g, lo, hi) in enumerate(pieces):
        if hi == lo:
            continue
        val, err = _eval_panel(g, lo, hi)
        n_eval += _NODES.size
        heapq.heappush(heap, (-err, lo, hi, val, idx))

    def totals():
        return math.fsum(item[3] for item in heap), math.fsum(-item[0] for item in heap)

    total, err_total = totals()
    n_split = 0
    while err_total > max(spec.rel_tol * abs(total), spec.abs_tol):
        if n_split >= spec.max_subdivisions:
            raise QuadratureError(
                f"no convergence after {n_split} subdivisions "
                f"(estimate {total!r}, error {err_total:.3g})",
                total,
                err_total,
            )
        neg_err, lo, hi, val, idx = heapq.heappop(heap)
        g = pieces[idx][0]
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            raise QuadratureError(
                f"panel [{lo}, {hi}] cannot be bisected further (estimate {total!r})",
                total,
                err_total,
            )
        total -= val
        err_total += neg_err
        for sub_lo, sub_hi in ((lo, mid), (mid, hi)):
            v, e = _eval_panel(g, sub_lo, sub_hi)
            heapq.heappush(heap, (-e, sub_lo, sub_hi, v, idx))
            total += v
            err_total += e
        n_eval += 2 * _NODES.size
        n_split += 1
        if n_split % 64 == 0:
            # resync the running sums
            total, err_total = totals()
    total, err_total = totals()
    return QuadResult(total, err_total, n_eval)


def integrate_2d(
    f: Callable[[float, np.ndarray], np.ndarray],
    x_domain: tuple[float, float],
    y_domain: tuple[float, float],
    spec: QuadratureSpec | None = None,
    x_scale: float = 1.0,
    y_scale: float = 1.0,
) -> QuadResult:
    """Iterated integral of ``f(x, y_array)`` over a product domain.

    The outer integral gets half of the relative tolerance and each inner
    integral a quarter; the reported error adds the outer estimate to the
    accumulated inner estimates.
    """
    spec = spec or QuadratureSpec()
    inner_spec = QuadratureSpec(spec.rel_tol / 4, spec.abs_tol / 4, spec.max_subdivisions)
    outer_spec = QuadratureSpec(spec.rel_tol / 2, spec.abs_tol / 2, spec.max_subdivisions)
    inner_err = []

    def outer(xs):
        out = np.empty(len(xs))
        for i, x in enumerate(xs):
            res = integrate_1d(lambda ys: f(x, ys), *y_domain, spec=inner_spec, scale=y_scale)
            out[i] = res.value
            inner_err.append(res.error)
        return out

    res = integrate_1d(outer, *x_domain, spec=outer_spec, scale=x_scale)
    inner_bound = inner_spec.rel_tol * abs(res.value) + max(inner_err, default=0.0)
    return QuadResult(res.value, res.error + inner_bound, res.n_eval)


def graded_half_line_rule(
    scale: float = 1.0,
    ratio: float = 0.2,
    levels: int = 40,
    order: int = 16,
    tail_levels: int = 16,
) -> tuple[np.ndarray, np.ndarray]:
    """Fixed product-friendly rule for int_0^inf with endpoint singularities.

    Panels shrink geometrically toward 0 (``[scale r^(k+1), scale r^k]``),
    and the tail beyond ``scale`` uses the exponential map with panels
    shrinking toward u = 0.  Returns (nodes, weights).
    """
    t, w = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []

    def add(lo, hi):
        c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
        nodes.append(c + h * t)
        weights.append(h * w)

    edges = scale * ratio ** np.arange(levels + 1)
    add(0.0, edges[-1])
    for lo, hi in zip(edges[1:], edges[:-1]):
        add(lo, hi)
    u_edges = ratio ** np.arange(tail_levels + 1)
    u_nodes, u_weights = [], []
    for lo, hi in [(0.0, u_edges[-1])] + list(zip(u_edges[1:], u_edges[:-1])):
        c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
        u_nodes.append(c + h * t)
        u_weights.append(h * w)
    u = np.concatenate(u_nodes)
    nodes.append(scale - scale * np.log(u))
    weights.append(np.concatenate(u_weights) * scale / u)
    return np.concatenate(nodes), np.concatenate(weights)


def det(m) -> float:
    """Determinant of a square matrix by pivoted elimination (singular -> 0)."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"det needs a square matrix, got shape {a.shape}")
    if a.shape[0] == 0:
        return 1.0
    return float(_backend.lu_det(a))


class LDU(NamedTuple):
    L: np.ndarray
    D: np.ndarray
    U: np.ndarray


class DegeneratePairingError(ArithmeticError):
    """A leading principal minor vanished; ``index`` is the failing pivot."""

    def __init__(self, index: int, pivot: float):
        super().__init__(
            f"degenerate pairing: leading principal minor of order {index + 1} vanishes "
            f"(pivot {index} = {pivot:.3g})"
        )
        self.index = index
        self.pivot = pivot


def ldu_biorthogonalize(m, pivot_tol: float = 1e-12) -> LDU:
    """Factor M = L diag(D) U with unit triangular L, U and no pivoting.

    Pivoting is not allowed because the triangular factors are the
    coefficient matrices of the biorthogonal polynomials.  A pivot with
    ``|D_k| <= pivot_tol * max|M|`` raises :class:`DegeneratePairingError`.
    """
    a = np.array(m, dtype=float, copy=True)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise ValueError(f"ldu_biorthogonalize needs a square matrix, got shape {a.shape}")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    L, U, D = np.eye(n), np.eye(n), np.zeros(n)
    for k in range(n):
        piv = a[k, k]
        if not abs(piv) > pivot_tol * scale:
            raise DegeneratePairingError(k, piv)
        D[k] = piv
        L[k + 1:, k] = a[k + 1:, k] / piv
        U[k, k + 1:] = a[k, k + 1:] / piv
        a[k + 1:, k + 1:] -= np.outer(a[k + 1:, k], a[k, k + 1:]) / piv
    return LDU(L, D, U)


def sym_eigenvalues(m, tol: float = 1e-12) -> np.ndarray:
    """Ascending eigenvalues of a real symmetric matrix (or a stack of them)."""
    a = np.asarray(m, dtype=float)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError(f"sym_eigenvalues needs square matrices, got shape {a.shape}")
    asym = np.max(np.abs(a - np.swapaxes(a, -1, -2))) if a.size else 0.0
    if asym > tol * max(1.0, float(np.max(np.abs(a))) if a.size else 0.0):
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3g})")
    return np.linalg.eigvalsh(a)


class RngStream:
    """Seeded MT19937 stream (numpy bit generator) with uniform/normal draws.

    Independent sub-streams come from :meth:`spawn`, which splits the
    underlying ``SeedSequence``; a stream object must not be shared
    between concurrent tasks.
    """

    algorithm = "MT19937"

    def __init__(self, seed: int | np.random.SeedSequence):
        if isinstance(seed, np.random.SeedSequence):
            self._seq = seed
        else:
            seed = int(seed)
            if not 0 <= seed < 2**64:
                raise ValueError("seed must be a 64-bit unsigned integer")
            self._seq = np.random.SeedSequence(seed)
        self._gen = np.random.Generator(np.random.MT19937(self._seq))

    def uniform(self, size=None):
        """Draws in [0, 1)."""
        return self._gen.random(size)

    def normal(self, size=None):
        return self._gen.standard_normal(size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def spawn(self, n: int) -> list["RngStream"]:
        return [RngStream(s) for s in self._seq.spawn(n)]


def rng_stream(seed: int) -> RngStream:
    return RngStream(seed)
