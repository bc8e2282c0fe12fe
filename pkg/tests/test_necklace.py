import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mwkernel import necklace as nk
from mwkernel.cli import necklace_deviation


def phi_count(n, d):
    """|Phi(n, d)| by inclusion-exclusion over uncovered pairs."""
    total = 0
    for j in range(d + 1):
        slots = 2 * (d - j)
        if slots >= n:
            total += (-1) ** j * math.comb(d, j) * math.perm(slots, n)
    return total


def small_pair(seed, n_pos=3, n_neg=3):
    return nk.DiscreteKernelPair.random(np.random.default_rng(seed), n_pos, n_neg)


def mute_loop_reference(dk, phi, points):
    """Nested loops over every mute index assignment, summing eval_H_d."""
    r = [None] * phi.d
    s = [None] * phi.d
    for (m, primed), x in zip(phi.targets, points):
        _, idx = dk.locate(x)
        (s if primed else r)[m - 1] = idx
    free_r = [i for i in range(phi.d) if r[i] is None]
    free_s = [i for i in range(phi.d) if s[i] is None]
    total = 0.0
    for rv in itertools.product(range(dk.pos_grid.size), repeat=len(free_r)):
        for sv in itertools.product(range(dk.neg_grid.size), repeat=len(free_s)):
            rr, ss = list(r), list(s)
            for i, v in zip(free_r, rv):
                rr[i] = v
            for i, v in zip(free_s, sv):
                ss[i] = v
            total += nk.eval_H_d(dk, rr, ss)
    return total


def signed_points(dk, signs, rng):
    return [float((dk.pos_grid if s else dk.neg_grid)[rng.integers(0, 3)]) for s in signs]


class TestEnumeration:
    def test_examples(self):
        assert len(nk.enum_phi(1, 1)) == 2
        assert len(nk.enum_phi(2, 2)) == 8
        assert nk.enum_phi(3, 1) == []

    @pytest.mark.parametrize("n", range(1, 7))
    @pytest.mark.parametrize("d", range(1, 8))
    def test_counts(self, n, d):
        maps = nk.enum_phi(n, d)
        assert len(maps) == phi_count(n, d)
        assert (len(maps) == 0) == (not (n <= 2 * d and d <= n))
        for phi in maps:
            assert len(set(phi.targets)) == n
            assert {m for m, _ in phi.targets} == set(range(1, d + 1))

    def test_lexicographic(self):
        maps = nk.enum_phi(3, 2)
        assert [p.targets for p in maps] == sorted(p.targets for p in maps)

    def test_guards(self):
        with pytest.raises(nk.SizeGuardError):
            nk.enum_phi(9, 5)
        with pytest.raises(ValueError):
            nk.enum_phi(0, 1)

    def test_kl_examples(self):
        assert len(nk.enum_phi_kl(1, 1, 1)) == 1
        assert len(nk.enum_phi_kl(1, 1, 2)) == 2
        assert len(nk.enum_phi_kl(1, 0, 1)) == 1

    @pytest.mark.parametrize("k,l,d", [(2, 1, 2), (2, 2, 3), (3, 1, 3), (0, 2, 2)])
    def test_kl_is_sign_sorted_subset(self, k, l, d):
        kl = nk.enum_phi_kl(k, l, d)
        allmaps = nk.enum_phi(k + l, d)
        want = [p for p in allmaps if all(not pr for _, pr in p.targets[:k]) and all(pr for _, pr in p.targets[k:])]
        assert sorted(p.targets for p in kl) == sorted(p.targets for p in want)

    def test_preimage_and_str(self):
        phi = nk.PhiMap(2, 1, ((1, False), (1, True)))
        assert phi.preimage(1, True) == 2 and phi.preimage(1, False) == 1
        assert str(phi) == "phi[1->1, 2->1']"


class TestDiscretePair:
    def test_validation(self):
        with pytest.raises(ValueError):
            nk.DiscreteKernelPair([1.0], [1.0], [[0.0]], [[0.0]])
        with pytest.raises(ValueError):
            nk.DiscreteKernelPair([1.0, 1.0], [-1.0], [[0.0], [0.0]], [[0.0, 0.0]])
        with pytest.raises(ValueError):
            nk.DiscreteKernelPair([1.0], [-1.0], [[0.0, 1.0]], [[0.0]])

    def test_read_only(self):
        dk = small_pair(0)
        with pytest.raises(ValueError):
            dk.N[0, 0] = 1.0

    def test_locate(self):
        dk = small_pair(1)
        assert dk.locate(dk.neg_grid[2]) == (False, 2)
        with pytest.raises(ValueError):
            dk.locate(123.0)


class TestHd:
    def test_d1(self):
        dk = small_pair(2)
        assert nk.eval_H_d(dk, [1], [2]) == pytest.approx(dk.w[2, 1] * dk.N[1, 2])

    def test_zero_w(self):
        dk = nk.DiscreteKernelPair([1.0, 2.0], [-1.0, -2.0], np.ones((2, 2)), np.array([[0.0, 1.0], [1.0, 1.0]]))
        assert nk.eval_H_d(dk, [0, 1], [0, 1]) == 0.0

    def test_d2_hand_expansion(self):
        dk = small_pair(3)
        r, s = [0, 2], [1, 0]
        N, w = dk.N, dk.w
        ref = 0.5 * w[1, 0] * w[0, 2] * (N[0, 1] * N[2, 0] - N[0, 0] * N[2, 1])
        assert nk.eval_H_d(dk, r, s) == pytest.approx(ref, rel=1e-14)


class TestApplyPhi:
    def test_n_equals_d(self):
        dk = small_pair(4)
        phi = nk.PhiMap(2, 1, ((1, False), (1, True)))
        x, y = dk.pos_grid[1], dk.neg_grid[0]
        assert nk.apply_phi(dk, phi, [x, y]) == pytest.approx(nk.eval_H_d(dk, [1], [0]))

    def test_single_point(self):
        dk = small_pair(5)
        phi = nk.PhiMap(1, 1, ((1, False),))
        x = dk.pos_grid[2]
        assert nk.apply_phi(dk, phi, [x]) == pytest.approx(float(dk.N[2] @ dk.w[:, 2]), rel=1e-14)

    def test_sign_mismatch(self):
        dk = small_pair(6)
        phi = nk.PhiMap(1, 1, ((1, True),))
        with pytest.raises(ValueError, match="wrong sign"):
            nk.apply_phi(dk, phi, [dk.pos_grid[0]])

    @pytest.mark.parametrize("n,d", [(2, 2), (3, 2), (3, 3), (2, 1)])
    def test_against_nested_loops(self, n, d):
        dk = small_pair(7 + n + d)
        rng = np.random.default_rng(n * 10 + d)
        for phi in nk.enum_phi(n, d):
            pts = signed_points(dk, [not pr for _, pr in phi.targets], rng)
            assert nk.apply_phi(dk, phi, pts) == pytest.approx(mute_loop_reference(dk, phi, pts), rel=1e-12, abs=1e-14)

    def test_orbit_invariance(self):
        # relabeling the pairs (S_d acting on m) leaves phi H_d unchanged
        dk = small_pair(8)
        rng = np.random.default_rng(8)
        for phi in nk.enum_phi(3, 2):
            pts = signed_points(dk, [not pr for _, pr in phi.targets], rng)
            base = nk.apply_phi(dk, phi, pts)
            swapped = nk.PhiMap(phi.n, phi.d, tuple((3 - m, pr) for m, pr in phi.targets))
            assert nk.apply_phi(dk, swapped, pts) == pytest.approx(base, rel=1e-13, abs=1e-15)


class TestNecklaceSum:
    def test_one_point(self):
        dk = small_pair(9)
        x, y = dk.pos_grid[0], dk.neg_grid[1]
        assert nk.necklace_lhs(dk, [x]) == pytest.approx(float(dk.N[0] @ dk.w[:, 0]), rel=1e-14)
        assert nk.necklace_lhs(dk, [y]) == pytest.approx(float(dk.w[1] @ dk.N[:, 1]), rel=1e-14)
        assert nk.necklace_rhs(dk, [x]) == pytest.approx(nk.necklace_lhs(dk, [x]), rel=1e-14)

    def test_empty(self):
        dk = small_pair(10)
        assert nk.necklace_lhs(dk, []) == 1.0 and nk.necklace_rhs(dk, []) == 1.0

    def test_ntilde_cases(self):
        dk = small_pair(11, 2, 3)
        N, w = dk.N, dk.w
        M = nk.ntilde_discrete(N, w)
        for i in range(2):
            for j in range(2):
                assert M[i, j] == pytest.approx(sum(N[i, s] * w[s, j] for s in range(3)))
        for i in range(2):
            for j in range(3):
                assert M[i, 2 + j] == N[i, j]
        for i in range(3):
            for j in range(2):
                ref = sum(w[i, r] * N[r, s] * w[s, j] for r in range(2) for s in range(3)) - w[i, j]
                assert M[2 + i, j] == pytest.approx(ref, rel=1e-13)
        for i in range(3):
            for j in range(3):
                assert M[2 + i, 2 + j] == pytest.approx(sum(w[i, r] * N[r, j] for r in range(2)))

    @given(st.integers(0, 2**32 - 1), st.lists(st.booleans(), min_size=1, max_size=4))
    @settings(max_examples=40, deadline=None)
    def test_lhs_equals_rhs(self, seed, signs):
        dk = small_pair(seed)
        pts = signed_points(dk, signs, np.random.default_rng(seed + 1))
        assert necklace_deviation(dk, pts) < 1e-10

    def test_five_points(self):
        dk = small_pair(12)
        pts = [dk.pos_grid[0], dk.neg_grid[0], dk.pos_grid[1], dk.neg_grid[2], dk.pos_grid[2]]
        lhs, rhs = nk.necklace_lhs(dk, pts), nk.necklace_rhs(dk, pts)
        assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_guard(self):
        dk = small_pair(13)
        with pytest.raises(nk.SizeGuardError):
            nk.necklace_lhs(dk, [dk.pos_grid[0]] * 7)


class TestLaplace:
    def test_first_row(self):
        M = np.random.default_rng(1).uniform(-1, 1, (5, 5))
        ref = sum((-1) ** j * M[0, j] * np.linalg.det(np.delete(np.delete(M, 0, 0), j, 1)) for j in range(5))
        assert nk.laplace_expand(M, 1, 0) == pytest.approx(ref, rel=1e-12)

    def test_k1_l1_displayed(self):
        M = np.random.default_rng(2).uniform(-1, 1, (4, 4))
        minor = lambda rows, cols: np.linalg.det(np.delete(np.delete(M, rows, 0), cols, 1))
        ref = M[0, 0] * minor([0], [0])
        for i in range(1, 4):
            for j in range(1, 4):
                # 1-based (i+1) + (j+1) + 1 parity
                ref += (-1) ** (i + j + 1) * M[i, 0] * M[0, j] * minor([0, i], [0, j])
        assert nk.laplace_expand(M, 1, 1) == pytest.approx(ref, rel=1e-12)
        assert ref == pytest.approx(np.linalg.det(M), rel=1e-12)

    def test_two_rows(self):
        M = np.random.default_rng(3).uniform(-1, 1, (5, 5))
        ref = 0.0
        for c in itertools.combinations(range(5), 2):
            sign = (-1) ** (0 + 1 + sum(c))
            ref += sign * np.linalg.det(M[np.ix_([0, 1], c)]) * np.linalg.det(np.delete(np.delete(M, [0, 1], 0), c, 1))
        assert nk.laplace_expand(M, 2, 0) == pytest.approx(ref, rel=1e-12)

    @given(st.integers(0, 2**32 - 1), st.integers(3, 5))
    @settings(max_examples=15, deadline=None)
    def test_equals_det(self, seed, n):
        M = np.random.default_rng(seed).uniform(-1, 1, (n, n))
        ref = np.linalg.det(M)
        for k in range(0, 4):
            for l in range(0, 4 - k):
                if 1 <= k + l and max(k, l) <= n:
                    assert abs(nk.laplace_expand(M, k, l) - ref) <= 1e-12 * max(abs(ref), 1e-3)

    def test_guards(self):
        with pytest.raises(nk.SizeGuardError):
            nk.laplace_expand(np.eye(9), 1, 0)
        with pytest.raises(nk.SizeGuardError):
            nk.laplace_expand(np.eye(5), 3, 2)
        with pytest.raises(ValueError):
            nk.laplace_expand(np.eye(3), 0, 0)
        with pytest.raises(ValueError):
            nk.laplace_expand(np.ones((2, 3)), 1, 0)


class TestNecklaceDiagnostics:
    def test_dump_and_reduce(self):
        # labels 1 -> 1, 2 -> 3, 3 -> 2'; sigma = (3 1 2) gives one cycle
        phi = nk.PhiMap(3, 3, ((1, False), (3, False), (2, True)))
        neck = nk.build_necklace(phi, [3, 1, 2])
        lines = neck.dump().splitlines()
        assert len(lines) == 1
        tokens = lines[0].split()
        beads = tokens[::2]
        assert [b[0] for b in beads] == ["W", "B"] * 3
        assert sorted(b[1:] for b in beads if len(b) > 1) == ["1", "2", "3"]
        red = neck.reduce()
        assert red.n_n_choices + red.n_w_choices >= 1
        assert sorted(b.label for comp in red.components for b, _ in comp) == [1, 2, 3]

    def test_sample_reduction(self):
        # W1 -N-> B -w-> W3 -N-> B2 -w->  reduces to  W1 -> W3 -> B2 -w->
        phi = nk.PhiMap(3, 2, ((1, False), (2, True), (2, False)))
        neck = nk.build_necklace(phi, [1, 2])
        assert neck.dump().splitlines() == ["W1 -N-> B -w->", "W3 -N-> B2 -w->"]
        phi2 = nk.PhiMap(3, 2, ((1, False), (1, True), (2, False)))
        neck2 = nk.build_necklace(phi2, [2, 1])
        assert neck2.dump() == "W1 -N-> B -w-> W3 -N-> B2 -w->"
        assert neck2.reduce().dump() == "W1 -> W3 -> B2 -w->"

    def test_connected_components(self):
        phi = nk.PhiMap(2, 2, ((1, False), (2, False)))
        assert len(nk.build_necklace(phi, [1, 2]).components) == 2
        assert len(nk.build_necklace(phi, [2, 1]).components) == 1

    def test_bad_sigma(self):
        with pytest.raises(ValueError):
            nk.build_necklace(nk.PhiMap(1, 1, ((1, False),)), [2])
