"""Two coupled Hermitian random matrices: biorthogonal polynomials and the
four-block correlation kernel.

The eigenvalue weight is ``w(x, y) = exp(-U(y) - V(x) + c x y)`` where the
first argument is an eigenvalue of the second matrix and the second
argument one of the first matrix.  The pairing of a first-matrix function
``f`` with a second-matrix function ``g`` is

    <f, g> = iint f(x) g(y) w(y, x) dx dy,

so the moment matrix is ``M[i, j] = iint x^i y^j exp(-U(x) - V(y) + c x y)``.
With biorthogonal ``P_i`` (first matrix), ``Q_i`` (second) and
``H(x, y) = sum_i P_i(x) Q_i(y)``, the blocks are

    K11(x, y) = int H(x, s) w(s, y) ds                 (x, y first)
    K12(x, y) = H(x, y)                                 (x first, y second)
    K21(x, y) = iint w(x, r) H(r, s) w(s, y) - w(x, y)  (x second, y first)
    K22(x, y) = int w(x, r) H(r, y) dr                  (x, y second)

Polynomial coefficients are stored in ascending powers.
"""
from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .numerics import (
    DegeneratePairingError,
    QuadratureError,
    QuadratureSpec,
    RngStream,
    det,
    ldu_biorthogonalize,
    sym_eigenvalues,
)

__all__ = [
    "InvalidModelError",
    "TwoMatrixModel",
    "gaussian_model",
    "BiorthogonalSystem",
    "CorrelationQuery",
    "weight",
    "pairing_moments",
    "biorthogonalize",
    "biorthogonality_residual",
    "kernel_H",
    "em_kernel_block",
    "em_blocks_on_measure",
    "rho_kl",
    "BruteForceSpec",
    "brute_force_rho",
    "McResult",
    "mc_sample",
    "write_samples_csv",
    "DegeneratePairingError",
]

# truncation threshold for the weight relative to its maximum
TRUNCATION = 1e-18
_LOG_TRUNC = math.log(TRUNCATION)


class InvalidModelError(ValueError):
    """Potentials or coupling outside the supported class."""


def _trim(coeffs) -> tuple:
    c = [float(v) for v in coeffs]
    while c and c[-1] == 0.0:
        c.pop()
    return tuple(c)


@dataclass(frozen=True)
class TwoMatrixModel:
    """Potentials ``U`` (first matrix), ``V`` (second), coupling ``c``, size ``N``.

    Construction only normalizes the data; :meth:`validate` checks that the
    weight is integrable (even degree >= 2, positive leading coefficient,
    and ``4 u2 v2 > c^2`` when both potentials are quadratic).
    """

    U: tuple
    V: tuple
    c: float
    N: int

    def __post_init__(self):
        object.__setattr__(self, "U", _trim(self.U))
        object.__setattr__(self, "V", _trim(self.V))
        object.__setattr__(self, "c", float(self.c))
        if int(self.N) != self.N or self.N < 1:
            raise InvalidModelError(f"N must be a positive integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        if not all(math.isfinite(v) for v in self.U + self.V + (self.c,)):
            raise InvalidModelError("model coefficients must be finite")

    def validate(self) -> "TwoMatrixModel":
        for name, p in (("U", self.U), ("V", self.V)):
            deg = len(p) - 1
            if deg < 2 or deg % 2:
                raise InvalidModelError(f"{name} must have even degree >= 2, got degree {max(deg, 0)}")
            if not p[-1] > 0:
                raise InvalidModelError(f"{name} must have a positive leading coefficient")
        if len(self.U) == 3 and len(self.V) == 3 and not 4 * self.U[2] * self.V[2] > self.c**2:
            raise InvalidModelError(
                f"quadratic potentials need 4 u2 v2 > c^2 (got u2={self.U[2]}, v2={self.V[2]}, c={self.c})"
            )
        return self

    @classmethod
    def from_dict(cls, obj) -> "TwoMatrixModel":
        try:
            return cls(tuple(obj["U"]), tuple(obj["V"]), obj["c"], obj["N"])
        except (KeyError, TypeError) as exc:
            raise InvalidModelError(f"model needs keys U, V, c, N: {exc}") from None

    @classmethod
    def from_json(cls, path) -> "TwoMatrixModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return {"U": list(self.U), "V": list(self.V), "c": self.c, "N": self.N}

    @property
    def quadratic(self) -> tuple[float, float] | None:
        """(a, b) when U = a x^2 + const and V = b x^2 + const, else None."""
        U = self.U + (0.0,) * 3
        V = self.V + (0.0,) * 3
        if len(self.U) == 3 and len(self.V) == 3 and U[1] == 0 and V[1] == 0:
            return U[2], V[2]
        return None


def gaussian_model(a: float, b: float, c: float, N: int) -> TwoMatrixModel:
    """U = a x^2, V = b x^2."""
    return TwoMatrixModel((0.0, 0.0, a), (0.0, 0.0, b), c, N)


def weight(model: TwoMatrixModel, x, y):
    """w(x, y) = exp(-U(y) - V(x) + c x y); x is a second-matrix variable."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.exp(-npoly.polyval(y, model.U or (0.0,)) - npoly.polyval(x, model.V or (0.0,)) + model.c * x * y)
    return float(out) if out.ndim == 0 else out


def _log_pairing_weight(model, x, y):
    # log of w(y, x): x first matrix, y second
    return -npoly.polyval(x, model.U) - npoly.polyval(y, model.V) + model.c * x * y


def _truncation_box(model: TwoMatrixModel) -> tuple[float, float]:
    """Half-widths (Lx, Ly) outside which w(y, x) < TRUNCATION * max w."""
    R = 2.0
    while True:
        g = np.linspace(-R, R, 801)
        lw = _log_pairing_weight(model, g[:, None], g[None, :])
        top = lw.max()
        border = max(lw[0].max(), lw[-1].max(), lw[:, 0].max(), lw[:, -1].max())
        if border < top + _LOG_TRUNC:
            break
        R *= 2.0
        if R > 1e4:
            raise InvalidModelError("weight does not decay; cannot determine an integration box")
    keep = lw >= top + _LOG_TRUNC
    step = g[1] - g[0]
    lx = float(np.abs(g[np.any(keep, axis=1)]).max()) + step
    ly = float(np.abs(g[np.any(keep, axis=0)]).max()) + step
    return lx, ly


def _gl(n, lo, hi):
    t, w = np.polynomial.legendre.leggauss(n)
    h = 0.5 * (hi - lo)
    return lo + h + h * t, h * w


def _tensor_moments(model, n, lx, ly, size):
    x, wx = _gl(n, -lx, lx)
    y, wy = _gl(n, -ly, ly)
    W = np.exp(_log_pairing_weight(model, x[:, None], y[None, :])) * wx[:, None] * wy[None, :]
    vx = np.vander(x, size, increasing=True)
    vy = np.vander(y, size, increasing=True)
    return vx.T @ W @ vy, np.abs(vx).T @ W @ np.abs(vy)


def pairing_moments(model: TwoMatrixModel, spec: QuadratureSpec | None = None, size: int | None = None) -> np.ndarray:
    """Moment matrix ``M[i, j] = <x^i, y^j>``, ``0 <= i, j < size`` (default N).

    Tensor Gauss-Legendre on the truncation box; the node count doubles
    until two successive rules agree to ``spec.rel_tol`` (entrywise,
    relative to the absolute moments).
    """
    model.validate()
    spec = spec or QuadratureSpec()
    size = model.N if size is None else int(size)
    lx, ly = _truncation_box(model)
    n = 64
    prev, _ = _tensor_moments(model, n, lx, ly, size)
    while True:
        n *= 2
        cur, absm = _tensor_moments(model, n, lx, ly, size)
        if np.all(np.abs(cur - prev) <= spec.rel_tol * absm + spec.abs_tol):
            return cur
        if n >= 2048:
            raise QuadratureError(
                f"moment quadrature did not settle at {n} nodes per axis",
                float(cur[0, 0]),
                float(np.max(np.abs(cur - prev))),
            )
        prev = cur


@dataclass(frozen=True)
class BiorthogonalSystem:
    """Coefficient triangles in ascending powers: ``P_i(x) = sum_j P[i, j] x^j``.

    ``P @ M @ Q.T = I`` for the moment matrix ``M``; P and Q share the
    magnitude ``|D_k|^(-1/2)`` of each pivot and Q carries its sign.
    """

    P: np.ndarray
    Q: np.ndarray
    H_coeffs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "H_coeffs", self.P.T @ self.Q)

    @property
    def N(self) -> int:
        return self.P.shape[0]

    def eval_P(self, x) -> np.ndarray:
        """Values P_i(x), shape (N,) + x.shape."""
        return self.P @ _powers(x, self.N)

    def eval_Q(self, y) -> np.ndarray:
        return self.Q @ _powers(y, self.N)


def _powers(x, n):
    x = np.asarray(x, dtype=float)
    return np.stack([x**j for j in range(n)]) if n else np.empty((0,) + x.shape)


def biorthogonalize(M) -> BiorthogonalSystem:
    """Biorthogonal coefficient triangles from the moment matrix (no pivoting).

    Raises :class:`DegeneratePairingError` at the first vanishing leading
    principal minor.
    """
    M = np.asarray(M, dtype=float)
    L, D, U = ldu_biorthogonalize(M)
    n = M.shape[0]
    scale = np.abs(D) ** -0.5
    A = scale[:, None] * np.linalg.solve(L, np.eye(n))
    B = (np.sign(D) * scale)[:, None] * np.linalg.solve(U.T, np.eye(n))
    # the inverses of unit triangular factors are unit triangular; clean roundoff
    return BiorthogonalSystem(np.tril(A), np.tril(B))


def biorthogonality_residual(sys: BiorthogonalSystem, M) -> float:
    """max |<P_i, Q_j> - delta_ij| with the pairing given by moments ``M``."""
    M = np.asarray(M, dtype=float)[: sys.N, : sys.N]
    return float(np.max(np.abs(sys.P @ M @ sys.Q.T - np.eye(sys.N))))


def kernel_H(sys: BiorthogonalSystem, x, y):
    """H(x, y) = sum_i P_i(x) Q_i(y) (broadcasting)."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    out = np.einsum("i...,ij,j...->...", _powers(x, sys.N), sys.H_coeffs, _powers(y, sys.N))
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# one-dimensional moments of the weight along a line


_LINE_NODES = 96


def _line_moments(poly, lin, n_pow, spec):
    """int s^j exp(-poly(s) + lin s) ds for j < n_pow, for each entry of ``lin``."""
    lin = np.atleast_1d(np.asarray(lin, dtype=float))
    out = np.empty((n_pow, lin.size))
    for k, b in enumerate(lin):
        # locate the bulk of exp(g), g(s) = -poly(s) + b s
        R = 4.0
        while True:
            g_grid = np.linspace(-R, R, 2001)
            g = -npoly.polyval(g_grid, poly) + b * g_grid
            top = g.max()
            if max(g[0], g[-1]) < top + _LOG_TRUNC:
                break
            R *= 2.0
            if R > 1e4:
                raise QuadratureError("line integral weight does not decay", math.nan, math.inf)
        keep = g_grid[g >= top + _LOG_TRUNC]
        step = g_grid[1] - g_grid[0]
        lo, hi = keep.min() - step, keep.max() + step

        def rule(pieces):
            edges = np.linspace(lo, hi, pieces + 1)
            total = np.zeros(n_pow)
            for a, c in zip(edges[:-1], edges[1:]):
                s, ws = _gl(_LINE_NODES, a, c)
                e = ws * np.exp(-npoly.polyval(s, poly) + b * s - top)
                total += _powers(s, n_pow) @ e
            return total

        coarse, fine = rule(1), rule(2)
        scale = np.max(np.abs(fine)) if fine.size else 0.0
        if np.any(np.abs(fine - coarse) > spec.rel_tol * np.maximum(np.abs(fine), 1e-3 * scale) + spec.abs_tol):
            raise QuadratureError(
                "line moment quadrature did not settle", float(fine[0]), float(np.max(np.abs(fine - coarse)))
            )
        out[:, k] = fine * math.exp(top)
    return out


def _mQ(sys, model, y, spec):
    # int Q_i(s) w(s, y) ds = exp(-U(y)) * sum_j Q[i, j] int s^j exp(-V(s) + c y s) ds
    y = np.atleast_1d(np.asarray(y, dtype=float))
    mom = _line_moments(model.V, model.c * y, sys.N, spec)
    return (sys.Q @ mom) * np.exp(-npoly.polyval(y, model.U))


def _mP(sys, model, x, spec):
    # int w(x, r) P_i(r) dr = exp(-V(x)) * sum_j P[i, j] int r^j exp(-U(r) + c x r) dr
    x = np.atleast_1d(np.asarray(x, dtype=float))
    mom = _line_moments(model.U, model.c * x, sys.N, spec)
    return (sys.P @ mom) * np.exp(-npoly.polyval(x, model.V))


def em_kernel_block(sys: BiorthogonalSystem, model: TwoMatrixModel, i: int, j: int, x, y, spec=None):
    """Block ``K_ij(x, y)`` (vectorized over matching x, y arrays).

    Block indices select which matrix each argument belongs to: ``i`` for
    ``x`` and ``j`` for ``y`` (1 = first matrix, 2 = second).
    """
    spec = spec or QuadratureSpec()
    x_arr, y_arr = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    shape = x_arr.shape
    xf, yf = x_arr.ravel(), y_arr.ravel()
    if (i, j) == (1, 2):
        out = kernel_H(sys, xf, yf)
    elif (i, j) == (1, 1):
        out = np.sum(sys.eval_P(xf) * _mQ(sys, model, yf, spec), axis=0)
    elif (i, j) == (2, 2):
        out = np.sum(_mP(sys, model, xf, spec) * sys.eval_Q(yf), axis=0)
    elif (i, j) == (2, 1):
        out = np.sum(_mP(sys, model, xf, spec) * _mQ(sys, model, yf, spec), axis=0) - weight(model, xf, yf)
    else:
        raise ValueError(f"block indices must be 1 or 2, got ({i}, {j})")
    out = np.asarray(out, dtype=float).reshape(shape)
    return float(out) if out.ndim == 0 else out


def em_blocks_on_measure(H, w, mu1, mu2):
    """The four blocks with integrals taken against discrete measures.

    ``H[r, s]`` is sampled on first-matrix nodes ``r`` and second-matrix
    nodes ``s``, ``w[s, r]`` the other way round, and ``mu1``, ``mu2`` are the
    node masses.  Returns ``(K11, K12, K21, K22)`` over the node grids.
    """
    H = np.asarray(H, dtype=float)
    w = np.asarray(w, dtype=float)
    mu1 = np.asarray(mu1, dtype=float)
    mu2 = np.asarray(mu2, dtype=float)
    K11 = np.einsum("xs,s,sy->xy", H, mu2, w)
    K12 = H.copy()
    K21 = np.einsum("xr,r,rs,s,sy->xy", w, mu1, H, mu2, w) - w
    K22 = np.einsum("xr,r,ry->xy", w, mu1, H)
    return K11, K12, K21, K22


class CorrelationQuery(NamedTuple):
    """Points of the first matrix (``x1``) and the second (``x2``)."""

    x1: tuple
    x2: tuple

    @classmethod
    def make(cls, x1=(), x2=()):
        q = cls(tuple(float(v) for v in x1), tuple(float(v) for v in x2))
        if len(q.x1) + len(q.x2) < 1:
            raise ValueError("a correlation query needs at least one point")
        return q

    @property
    def k(self):
        return len(self.x1)

    @property
    def l(self):
        return len(self.x2)


def rho_kl(sys: BiorthogonalSystem, model: TwoMatrixModel, q: CorrelationQuery, spec=None) -> float:
    """rho_{k,l} as the determinant of the block kernel matrix (first-matrix
    points first)."""
    spec = spec or QuadratureSpec()
    if q.k > sys.N or q.l > sys.N:
        raise ValueError(f"k={q.k}, l={q.l} exceed N={sys.N}")
    pts = [(1, v) for v in q.x1] + [(2, v) for v in q.x2]
    n = len(pts)
    K = np.empty((n, n))
    for a, (ia, xa) in enumerate(pts):
        for b, (ib, xb) in enumerate(pts):
            K[a, b] = em_kernel_block(sys, model, ia, ib, xa, xb, spec)
    return det(K)


# ---------------------------------------------------------------------------
# brute force over the joint eigenvalue density


@dataclass(frozen=True)
class BruteForceSpec:
    """Tensor Gauss-Legendre with ``nodes`` points per mute variable."""

    nodes: int = 40


def _density_sum(model, x1_fixed, x2_fixed, x_nodes, x_w, y_nodes, y_w):
    N = model.N
    m1, m2 = N - len(x1_fixed), N - len(x2_fixed)
    axes = [(x_nodes, x_w)] * m1 + [(y_nodes, y_w)] * m2
    n_axes = len(axes)
    inner = min(n_axes, 3)
    outer_axes = axes[: n_axes - inner]
    inner_axes = axes[n_axes - inner:]
    if inner:
        grids = np.meshgrid(*[a for a, _ in inner_axes], indexing="ij")
        wgrids = np.meshgrid(*[w for _, w in inner_axes], indexing="ij")
        inner_vals = [g.ravel() for g in grids]
        inner_w = np.prod([g.ravel() for g in wgrids], axis=0)
    else:
        inner_vals, inner_w = [], np.ones(1)
    P = inner_w.size
    total = 0.0
    for outer_idx in itertools.product(*[range(len(a)) for a, _ in outer_axes]):
        cols = [np.full(P, outer_axes[k][0][i]) for k, i in enumerate(outer_idx)] + inner_vals
        wt = inner_w * np.prod([outer_axes[k][1][i] for k, i in enumerate(outer_idx)]) if outer_idx else inner_w
        mute = np.stack(cols, axis=1) if cols else np.empty((P, 0))
        X1 = np.concatenate([np.broadcast_to(np.asarray(x1_fixed, float), (P, len(x1_fixed))), mute[:, :m1]], axis=1)
        X2 = np.concatenate([np.broadcast_to(np.asarray(x2_fixed, float), (P, len(x2_fixed))), mute[:, m1:]], axis=1)
        Wm = weight(model, X2[:, :, None], X1[:, None, :])
        vd = np.ones(P)
        for i in range(N):
            for j in range(i + 1, N):
                vd = vd * (X1[:, i] - X1[:, j]) * (X2[:, i] - X2[:, j])
        total += float(np.dot(wt, np.linalg.det(Wm) * vd))
    return total


def brute_force_rho(model: TwoMatrixModel, q: CorrelationQuery, grid: BruteForceSpec | None = None) -> float:
    """rho_{k,l} by direct quadrature of the joint eigenvalue density.

    The density ``det[w(x2_i, x1_j)] prod_{i<j} (x1_i - x1_j)(x2_i - x2_j)``
    is integrated over the mute variables with a tensor Gauss-Legendre rule
    on the truncation box, normalized by the full integral computed with the
    same rule, and multiplied by ``N!^2 / ((N-k)! (N-l)!)``.
    """
    model.validate()
    grid = grid or BruteForceSpec()
    N = model.N
    if N > 3 or q.k + q.l > 2:
        raise ValueError(f"brute force is limited to N <= 3 and k + l <= 2 (got N={N}, k+l={q.k + q.l})")
    if q.k > N or q.l > N:
        raise ValueError("more query points than eigenvalues")
    lx, ly = _truncation_box(model)
    x, wx = _gl(grid.nodes, -lx, lx)
    y, wy = _gl(grid.nodes, -ly, ly)
    num = _density_sum(model, q.x1, q.x2, x, wx, y, wy)
    den = _density_sum(model, (), (), x, wx, y, wy)
    fact = math.factorial(N) ** 2 / (math.factorial(N - q.k) * math.factorial(N - q.l))
    return fact * num / den


# ---------------------------------------------------------------------------
# Monte Carlo for quadratic potentials


class McResult(NamedTuple):
    eig_A: np.ndarray  # (n_samples, N), ascending
    eig_B: np.ndarray
    edges: np.ndarray
    counts: np.ndarray  # histogram of all first-matrix eigenvalues


def _hermitian_pairs(rng, n, N, chol):
    # diagonal entries: real pairs with covariance inv(P); off-diagonal real and
    # imaginary parts: covariance inv(2P)
    diag = rng.normal(size=(n, N, 2)) @ chol.T
    m = N * (N - 1) // 2
    re = rng.normal(size=(n, m, 2)) @ chol.T / math.sqrt(2.0)
    im = rng.normal(size=(n, m, 2)) @ chol.T / math.sqrt(2.0)
    iu = np.triu_indices(N, 1)
    mats = []
    for k in range(2):
        X = np.zeros((n, N, N))
        Y = np.zeros((n, N, N))
        X[:, np.arange(N), np.arange(N)] = diag[:, :, k]
        X[:, iu[0], iu[1]] = re[:, :, k]
        X[:, iu[1], iu[0]] = re[:, :, k]
        Y[:, iu[0], iu[1]] = im[:, :, k]
        Y[:, iu[1], iu[0]] = -im[:, :, k]
        mats.append((X, Y))
    return mats


def _hermitian_eigs(X, Y):
    # realify X + iY as [[X, -Y], [Y, X]]; each eigenvalue appears twice
    R = np.block([[X, -Y], [Y, X]])
    return sym_eigenvalues(R)[:, ::2]


def mc_sample(
    model: TwoMatrixModel,
    n_samples: int,
    seed: int,
    edges=None,
) -> McResult:
    """Sample (A, B) with density proportional to exp(-tr(a A^2 + b B^2 - c A B)).

    The coupling sign matches the weight ``w`` (so the first-matrix
    eigenvalues follow ``K11(x, x)``).  Each independent real coordinate pair
    is drawn from the 2x2 Gaussian with precision ``[[2a, -c], [-c, 2b]]``
    (diagonal entries) or twice that (real and imaginary parts of
    off-diagonal entries), using an MT19937 stream seeded with ``seed``.
    """
    ab = model.quadratic
    if ab is None:
        raise InvalidModelError("Monte Carlo needs U = a x^2 and V = b x^2")
    a, b = ab
    c = model.c
    if not (a > 0 and b > 0 and 4 * a * b > c * c):
        raise InvalidModelError(f"Monte Carlo needs a, b > 0 and 4ab > c^2 (a={a}, b={b}, c={c})")
    n_samples = int(n_samples)
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    prec = np.array([[2 * a, -c], [-c, 2 * b]])
    chol = np.linalg.cholesky(np.linalg.inv(prec))
    rng = RngStream(seed)
    (XA, YA), (XB, YB) = _hermitian_pairs(rng, n_samples, model.N, chol)
    eig_A = _hermitian_eigs(XA, YA)
    eig_B = _hermitian_eigs(XB, YB)
    if edges is None:
        edges = np.linspace(-4.0, 4.0, 33)
    edges = np.asarray(edges, dtype=float)
    counts, _ = np.histogram(eig_A.ravel(), bins=edges)
    return McResult(eig_A, eig_B, edges, counts)


def write_samples_csv(path, result: McResult) -> None:
    """One row per sample: sorted eigenvalues of A, then of B."""
    N = result.eig_A.shape[1]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow([f"a{i}" for i in range(N)] + [f"b{i}" for i in range(N)])
        for ra, rb in zip(result.eig_A, result.eig_B):
            wr.writerow(["%.17g" % v for v in ra] + ["%.17g" % v for v in rb])
