"""Exact combinatorial engine for the Phi-map expansion of determinants.

A map ``phi`` in ``Phi(n, d)`` sends labels ``1..n`` injectively into the
slots ``{1, 1', ..., d, d'}`` so that every pair ``{m, m'}`` is hit.  For a
pair of discrete kernels ``N`` (positive grid x negative grid) and ``w``
(negative x positive), with integrals realized as sums over the grids,

    sum_d sum_{phi in Phi(n, d)} (phi H_d)(x_1..x_n) = det[N~(x_i, x_j)]

where ``H_d = (1/d!) prod w(s_i, r_i) det[N(r_i, s_j)]``.  Both sides are
implemented here so they can be compared to roundoff.

Slots are encoded as ``(m, primed)`` with ``m`` 1-based; the enumeration
order is lexicographic in the target tuple with ``m < m'``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import _backend
from .numerics import det

__all__ = [
    "SizeGuardError",
    "PhiMap",
    "DiscreteKernelPair",
    "enum_phi",
    "enum_phi_kl",
    "eval_H_d",
    "apply_phi",
    "necklace_lhs",
    "necklace_rhs",
    "ntilde_discrete",
    "laplace_expand",
    "Necklace",
    "ReducedNecklace",
    "build_necklace",
]

MAX_ENUM = 8
MAX_POINTS = 6
MAX_LAPLACE_N = 8
MAX_LAPLACE_KL = 4


class SizeGuardError(ValueError):
    """Input size exceeds a hard combinatorial limit."""


Slot = tuple  # (m, primed)


class PhiMap(NamedTuple):
    """Injective, pair-covering map from labels 1..n into ``{1,1',...,d,d'}``.

    ``targets[k-1] = (m, primed)`` is the image of label ``k``.
    """

    n: int
    d: int
    targets: tuple

    def __str__(self):
        body = ", ".join(f"{k + 1}->{m}{chr(39) if pr else ''}" for k, (m, pr) in enumerate(self.targets))
        return f"phi[{body}]"

    def preimage(self, m: int, primed: bool):
        """Label (1-based) mapped to slot ``(m, primed)``, or None."""
        try:
            return self.targets.index((m, primed)) + 1
        except ValueError:
            return None


def _slots(d):
    return [(m, pr) for m in range(1, d + 1) for pr in (False, True)]


def _covers(targets, d):
    hit = {m for m, _ in targets}
    return len(hit) == d


def enum_phi(n: int, d: int) -> list[PhiMap]:
    """All of Phi(n, d) in lexicographic order; empty unless n/2 <= d <= n."""
    if n < 1 or d < 1:
        raise ValueError("enum_phi needs n >= 1 and d >= 1")
    if n > MAX_ENUM:
        raise SizeGuardError(f"enum_phi: n={n} exceeds the limit {MAX_ENUM}")
    if not (n <= 2 * d and d <= n):
        return []
    return [PhiMap(n, d, t) for t in itertools.permutations(_slots(d), n) if _covers(t, d)]


def enum_phi_kl(k: int, l: int, d: int) -> list[PhiMap]:
    """Maps of ``k`` first-kind labels into unprimed and ``l`` second-kind labels
    into primed slots, injective and pair-covering.

    The returned :class:`PhiMap` lists the first-kind labels first
    (``targets[:k]``), then the second-kind ones.
    """
    if k < 0 or l < 0 or k + l < 1 or d < 1:
        raise ValueError("enum_phi_kl needs k, l >= 0, k + l >= 1 and d >= 1")
    if k + l > MAX_ENUM:
        raise SizeGuardError(f"enum_phi_kl: k+l={k + l} exceeds the limit {MAX_ENUM}")
    if k > d or l > d or k + l < d:
        return []
    out = []
    unprimed = [(m, False) for m in range(1, d + 1)]
    primed = [(m, True) for m in range(1, d + 1)]
    for first in itertools.permutations(unprimed, k):
        for second in itertools.permutations(primed, l):
            t = first + second
            if _covers(t, d):
                out.append(PhiMap(k + l, d, t))
    out.sort(key=lambda p: p.targets)
    return out


# ---------------------------------------------------------------------------
# discrete kernels


@dataclass(frozen=True)
class DiscreteKernelPair:
    """Finite grids with ``N`` (pos x neg) and ``w`` (neg x pos).

    The support conditions hold by construction: ``N`` only couples a
    positive point to a negative one and ``w`` a negative to a positive.
    """

    pos_grid: np.ndarray
    neg_grid: np.ndarray
    N: np.ndarray
    w: np.ndarray
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pos = np.asarray(self.pos_grid, dtype=float)
        neg = np.asarray(self.neg_grid, dtype=float)
        N = np.asarray(self.N, dtype=float)
        w = np.asarray(self.w, dtype=float)
        if pos.ndim != 1 or neg.ndim != 1 or pos.size == 0 or neg.size == 0:
            raise ValueError("grids must be nonempty 1-D arrays")
        if not (np.all(pos > 0) and np.all(neg < 0)):
            raise ValueError("pos_grid must be positive and neg_grid negative")
        if len(set(pos.tolist())) != pos.size or len(set(neg.tolist())) != neg.size:
            raise ValueError("grid points must be distinct")
        if N.shape != (pos.size, neg.size) or w.shape != (neg.size, pos.size):
            raise ValueError(
                f"N must be {pos.size}x{neg.size} and w {neg.size}x{pos.size}, "
                f"got {N.shape} and {w.shape}"
            )
        for name, v in (("pos_grid", pos), ("neg_grid", neg), ("N", N), ("w", w)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        index = {v: (True, i) for i, v in enumerate(pos.tolist())}
        index.update({v: (False, i) for i, v in enumerate(neg.tolist())})
        object.__setattr__(self, "_index", index)

    @classmethod
    def random(cls, rng, n_pos: int = 3, n_neg: int = 3, low: float = -1.0, high: float = 1.0):
        """Random instance: grids ``1..n_pos`` / ``-1..-n_neg`` with jitter,
        matrix entries uniform in ``[low, high)``.  ``rng`` is an
        :class:`~mwkernel.numerics.RngStream` or numpy Generator."""
        u = rng.uniform
        pos = np.arange(1, n_pos + 1) + 0.5 * np.asarray(u(size=n_pos))
        neg = -(np.arange(1, n_neg + 1) + 0.5 * np.asarray(u(size=n_neg)))
        N = low + (high - low) * np.asarray(u(size=(n_pos, n_neg)))
        w = low + (high - low) * np.asarray(u(size=(n_neg, n_pos)))
        return cls(pos, neg, N, w)

    def locate(self, value: float) -> tuple[bool, int]:
        """(is_positive, grid index) of a grid point."""
        try:
            return self._index[float(value)]
        except KeyError:
            raise ValueError(f"point {value!r} is not on either grid") from None

    def to_dict(self):
        return {
            "pos_grid": self.pos_grid.tolist(),
            "neg_grid": self.neg_grid.tolist(),
            "N": self.N.tolist(),
            "w": self.w.tolist(),
        }


def eval_H_d(dk: DiscreteKernelPair, r_idx: Sequence[int], s_idx: Sequence[int]) -> float:
    """(1/d!) prod_i w(s_i, r_i) det[N(r_i, s_j)] at grid indices."""
    r = np.asarray(r_idx, dtype=np.int64)
    s = np.asarray(s_idx, dtype=np.int64)
    if r.shape != s.shape or r.ndim != 1:
        raise ValueError("r_idx and s_idx must be 1-D of equal length")
    d = r.size
    prod = float(np.prod(dk.w[s, r]))
    if prod == 0.0:
        return 0.0
    return prod * det(dk.N[np.ix_(r, s)]) / math.factorial(d)


def _templates(dk, phi, points):
    r_t = np.full(phi.d, -1, dtype=np.int64)
    s_t = np.full(phi.d, -1, dtype=np.int64)
    for k, ((m, primed), x) in enumerate(zip(phi.targets, points)):
        is_pos, idx = dk.locate(x)
        if is_pos == primed:
            return None, (k, x, (m, primed))
        (s_t if primed else r_t)[m - 1] = idx
    return (r_t, s_t), None


def apply_phi(dk: DiscreteKernelPair, phi: PhiMap, points: Sequence[float]) -> float:
    """(phi H_d)(x_1..x_n): pin named variables, sum H_d over the mute ones.

    Point ``k`` must be on the positive grid when ``phi(k)`` is unprimed and
    on the negative grid when primed.
    """
    points = [float(x) for x in points]
    if len(points) != phi.n:
        raise ValueError(f"phi has n={phi.n} labels but {len(points)} points were given")
    tmpl, bad = _templates(dk, phi, points)
    if bad is not None:
        k, x, (m, primed) = bad
        slot = f"{m}'" if primed else f"{m}"
        raise ValueError(f"point {k + 1} (={x}) has the wrong sign for slot {slot}")
    r_t, s_t = tmpl
    return _backend.mute_sum(dk.N, dk.w, r_t, s_t) / math.factorial(phi.d)


def _check_points(dk, points):
    points = [float(x) for x in points]
    if len(points) > MAX_POINTS:
        raise SizeGuardError(f"at most {MAX_POINTS} points are supported, got {len(points)}")
    for x in points:
        dk.locate(x)
    return points


def necklace_lhs(dk: DiscreteKernelPair, points: Sequence[float]) -> float:
    """sum_d sum_{phi in Phi(n, d)} (phi H_d)(x_1..x_n) over the grids.

    Maps that send a point to a slot of the wrong sign vanish by the
    support conditions and are skipped.
    """
    points = _check_points(dk, points)
    n = len(points)
    if n == 0:
        return 1.0
    total = 0.0
    for d in range(math.ceil(n / 2), n + 1):
        fact = math.factorial(d)
        for phi in enum_phi(n, d):
            tmpl, bad = _templates(dk, phi, points)
            if bad is None:
                total += _backend.mute_sum(dk.N, dk.w, *tmpl) / fact
    return total


def ntilde_discrete(N, w) -> np.ndarray:
    """Block matrix of N~ over the full grid, rows/columns ordered (pos, neg).

    ``[[N w, N], [w N w - w, w N]]``.
    """
    N = np.asarray(N, dtype=float)
    w = np.asarray(w, dtype=float)
    return np.block([[N @ w, N], [w @ N @ w - w, w @ N]])


def necklace_rhs(dk: DiscreteKernelPair, points: Sequence[float]) -> float:
    """det[N~(x_i, x_j)] with the grid-sum N~."""
    points = _check_points(dk, points)
    if not points:
        return 1.0
    full = ntilde_discrete(dk.N, dk.w)
    n_pos = dk.pos_grid.size
    idx = []
    for x in points:
        is_pos, i = dk.locate(x)
        idx.append(i if is_pos else n_pos + i)
    idx = np.array(idx)
    return det(full[np.ix_(idx, idx)])


# ---------------------------------------------------------------------------
# expansion of det M along the first k rows and l columns


def _perm_sign(seq) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def _term_sign(a, b) -> int:
    # sign of prod m[a_i, b_i] * minor inside det M (0-based indices)
    order = sorted(range(len(a)), key=lambda i: a[i])
    b_rank = {v: r for r, v in enumerate(sorted(b))}
    parity = (sum(a) + sum(b)) % 2  # (-1)^(sum of 1-based indices) up to 2d
    return _perm_sign(b_rank[b[i]] for i in order) * (-1 if parity else 1)


def laplace_expand(M, k: int, l: int) -> float:
    """Expansion of det M along the first ``k`` rows and ``l`` columns.

    For each ``phi`` in ``Phi(k, l; d)`` the rows/columns it pins are fixed,
    the remaining row indices run over distinct tuples from ``k+1..N`` and
    column indices over distinct tuples from ``l+1..N``; each product
    ``m[a_1 b_1] ... m[a_d b_d]`` times its complementary minor is added with
    the sign it carries in det M, and the phi-sum is divided by ``d!``.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if M.ndim != 2 or M.shape[1] != n:
        raise ValueError(f"laplace_expand needs a square matrix, got shape {M.shape}")
    if k < 0 or l < 0 or k + l < 1:
        raise ValueError("need k, l >= 0 and k + l >= 1")
    if n > MAX_LAPLACE_N:
        raise SizeGuardError(f"matrix size {n} exceeds the limit {MAX_LAPLACE_N}")
    if k + l > MAX_LAPLACE_KL:
        raise SizeGuardError(f"k+l={k + l} exceeds the limit {MAX_LAPLACE_KL}")
    if n < max(k, l):
        raise ValueError(f"matrix of size {n} is too small for k={k}, l={l}")
    total = 0.0
    for d in range(max(k, l), min(k + l, n) + 1):
        part = 0.0
        for phi in enum_phi_kl(k, l, d):
            a = [None] * d
            b = [None] * d
            for lab, (m, primed) in enumerate(phi.targets):
                if primed:
                    b[m - 1] = lab - k  # column index (0-based) of a second-kind label
                else:
                    a[m - 1] = lab
            free_a = [i for i in range(d) if a[i] is None]
            free_b = [i for i in range(d) if b[i] is None]
            for rows in itertools.permutations(range(k, n), len(free_a)):
                aa = list(a)
                for i, r in zip(free_a, rows):
                    aa[i] = r
                for cols in itertools.permutations(range(l, n), len(free_b)):
                    bb = list(b)
                    for i, c in zip(free_b, cols):
                        bb[i] = c
                    if len(set(bb)) < d or len(set(aa)) < d:
                        continue
                    prod = 1.0
                    for i in range(d):
                        prod *= M[aa[i], bb[i]]
                    if prod == 0.0:
                        continue
                    keep_r = [i for i in range(n) if i not in aa]
                    keep_c = [j for j in range(n) if j not in bb]
                    minor = det(M[np.ix_(keep_r, keep_c)]) if keep_r else 1.0
                    part += _term_sign(aa, bb) * prod * minor
        total += part / math.factorial(d)
    return total


# ---------------------------------------------------------------------------
# necklace diagnostics


class Bead(NamedTuple):
    color: str  # "W" (white, unprimed slot / positive) or "B" (black, primed / negative)
    slot: int | None
    label: int | None

    def token(self):
        return self.color + ("" if self.label is None else str(self.label))


@dataclass(frozen=True)
class Necklace:
    """Oriented necklace of a term (phi, sigma): one cycle per component.

    Each component alternates white and black beads; white bead ``i``
    follows black ``i'`` (edge mark ``w``) and is followed by black
    ``sigma(i)'`` (edge mark ``N``).
    """

    components: tuple

    def dump(self) -> str:
        lines = []
        for comp in self.components:
            parts = []
            for bead in comp:
                parts.append(bead.token())
                parts.append("-N->" if bead.color == "W" else "-w->")
            lines.append(" ".join(parts))
        return "\n".join(lines)

    def reduce(self) -> "ReducedNecklace":
        """Drop the mute beads; a black-to-white edge that lost two mute
        beads is marked ``N``, an unchanged one ``w``."""
        comps = []
        for comp in self.components:
            m = len(comp)
            start = next((i for i, b in enumerate(comp) if b.label is not None), None)
            if start is None:
                continue
            beads, marks = [], []
            i = start
            while True:
                beads.append(comp[i])
                j, skipped = (i + 1) % m, 0
                while comp[j].label is None:
                    j, skipped = (j + 1) % m, skipped + 1
                if comp[i].color == "B" and comp[j].color == "W":
                    marks.append("N" if skipped == 2 else "w")
                else:
                    marks.append("")
                i = j
                if i == start:
                    break
            comps.append(tuple(zip(beads, marks)))
        return ReducedNecklace(tuple(comps))


@dataclass(frozen=True)
class ReducedNecklace:
    components: tuple

    def dump(self) -> str:
        lines = []
        for comp in self.components:
            parts = []
            for bead, mark in comp:
                parts.append(bead.token())
                parts.append(f"-{mark}->" if mark else "->")
            lines.append(" ".join(parts))
        return "\n".join(lines)

    @property
    def n_w_choices(self) -> int:
        return sum(1 for comp in self.components for _, m in comp if m == "w")

    @property
    def n_n_choices(self) -> int:
        return sum(1 for comp in self.components for _, m in comp if m == "N")


def build_necklace(phi: PhiMap, sigma: Sequence[int]) -> Necklace:
    """Necklace of the term of ``phi H_d`` indexed by the permutation ``sigma``
    (a sequence of 1-based images, ``sigma[i-1] = sigma(i)``)."""
    d = phi.d
    sigma = list(sigma)
    if sorted(sigma) != list(range(1, d + 1)):
        raise ValueError(f"sigma must be a permutation of 1..{d}")
    seen = set()
    comps = []
    for start in range(1, d + 1):
        if start in seen:
            continue
        comp = []
        i = start
        while i not in seen:
            seen.add(i)
            comp.append(Bead("W", i, phi.preimage(i, False)))
            j = sigma[i - 1]
            comp.append(Bead("B", j, phi.preimage(j, True)))
            i = j
        comps.append(tuple(comp))
    return Necklace(tuple(comps))
