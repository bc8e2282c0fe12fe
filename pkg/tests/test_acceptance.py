"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the summary lines are
written straight to the terminal (capture is bypassed for them).
"""
import math
import time

import numpy as np
import pytest

from mwkernel import cli
from mwkernel import eynard_mehta as em
from mwkernel import necklace as nk
from mwkernel import whittaker_kernel as wk
from mwkernel.numerics import QuadratureSpec, det, integrate_1d, rng_stream
from mwkernel.specfun import whittaker_w
from oracles import gaussian_moments

SEED = 20240611


@pytest.fixture
def report(capsys):
    def _report(tag, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance] {tag}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, f"{tag}: {detail}"

    return _report


def test_c01_necklace_oracle(report):
    t0 = time.perf_counter()
    worst, bad = cli.run_necklace(50, SEED, max_n=4)
    dt = time.perf_counter() - t0
    report("C01 necklace lhs == det N~", worst < 1e-10 and dt < 60, f"max rel {worst:.3g}, {dt:.1f}s")


def test_c02_laplace_expansion(report):
    t0 = time.perf_counter()
    worst, bad = cli.run_laplace(20, SEED, size=6, max_kl=4)
    dt = time.perf_counter() - t0
    report("C02 Laplace expansion", worst < 1e-12 and dt < 30, f"max rel {worst:.3g}, {dt:.1f}s")


def test_c03_whittaker_core(report):
    xs = np.array([0.5, 1.0, 2.0, 5.0])
    closed = float(np.max(np.abs(whittaker_w(0.0, 0.5, xs) / np.exp(-xs / 2) - 1)))
    sym = 0.0
    for k in (-1.3, 0.2, 1.7):
        for m in (0.15, 0.8, 2.4):
            for x in (0.3, 2.0, 9.0):
                a, b = whittaker_w(k, m, x), whittaker_w(k, -m, x)
                sym = max(sym, abs(a - b) / abs(a))
    assert (0.0, 1.0, 1.0) in cli.MOMENT_LATTICE and len(cli.MOMENT_LATTICE) == 20
    mom, _ = cli.run_moment()
    ok = closed < 1e-10 and sym < 1e-12 and mom < 1e-8
    report("C03 Whittaker core", ok, f"closed form {closed:.3g}, symmetry {sym:.3g}, moment {mom:.3g}")


def test_c04_closed_form_fixture(report):
    rng = rng_stream(SEED)
    worst = 0.0
    for _ in range(10):
        z = -rng.uniform()
        t1, t2 = rng.uniform(size=2)
        f = lambda w: (1 + t1 * w) ** (-z - 1) * (1 + t2 * w) ** (z - 1)
        ref = (1 / z) / (t2 - t1) * (((1 + t2) / (1 + t1)) ** z - 1)
        got = integrate_1d(f, 0.0, 1.0).value
        worst = max(worst, abs(got - ref) / abs(ref))
    report("C04 quadrature closed form", worst < 1e-10, f"max rel {worst:.3g}")


def test_c05_j_symmetry(report):
    worst = 0.0
    for z, zp in ((-0.3, -0.6), (-0.5, -0.5), (0.25, 0.75)):
        v, _ = cli.run_jsym(wk.validate_params(z, zp), 100, SEED)
        worst = max(worst, v)
    report("C05 J-symmetry", worst < 1e-8, f"max abs {worst:.3g}")


def test_c06_stieltjes(report):
    t0 = time.perf_counter()
    worst, bad = cli.run_stieltjes(wk.validate_params(-0.3, -0.6), [0.5, 1.0, 2.0, 5.0], QuadratureSpec())
    dt = time.perf_counter() - t0
    report("C06 integral relations", worst < 1e-6 and dt < 120, f"max rel {worst:.3g}, {dt:.1f}s")


def _mixed_config(rng, n):
    pts = 10.0 * (1.0 - rng.uniform(size=n))
    signs = np.where(rng.uniform(size=n) < 0.5, -1.0, 1.0)
    if n > 1:
        signs[0], signs[1] = 1.0, -1.0
    return pts * signs


def test_c07_gauge_invariance(report):
    rng = rng_stream(SEED)
    params = [(-0.3, -0.6), (-0.5, -0.5), (0.25, 0.75)]
    worst, worst_kappa = 0.0, 0.0
    for i in range(20):
        p = wk.validate_params(*params[i % len(params)])
        cfg = _mixed_config(rng, 1 + i % 4)
        K = wk.kernel_matrix(p, cfg)
        dk = det(K)
        dn = det(wk.ntilde_matrix(p, cfg))
        dev = abs(dn - dk) / abs(dk)
        if dev > worst:
            # componentwise condition number of det at K, for the report only
            worst, worst_kappa = dev, float(np.sum(np.abs(K * np.linalg.inv(K).T)))
    report("C07 gauge invariance", worst < 1e-10, f"max rel {worst:.3g}, det condition {worst_kappa:.3g}")


def test_c08_positivity(report):
    rng = rng_stream(SEED)
    params = [(-0.3, -0.6), (-0.5, -0.5), (0.25, 0.75), (-0.9, -0.1), (2.4, 2.6)]
    min_rho1, min_rho2 = math.inf, math.inf
    for i in range(50):
        p = wk.validate_params(*params[i % len(params)])
        if i % 2:
            x, y = _mixed_config(rng, 2)
        else:
            x, y = 10.0 * (1.0 - rng.uniform(size=2)) * (1.0 if rng.uniform() < 0.5 else -1.0)
        r1x, r1y = wk.kernel_diag(p, x), wk.kernel_diag(p, y)
        r2 = wk.correlation(p, [x, y])
        min_rho1 = min(min_rho1, r1x, r1y)
        min_rho2 = min(min_rho2, r2 / (r1x * r1y))
    ok = min_rho1 >= 0 and min_rho2 >= -1e-10
    report("C08 positivity", ok, f"min rho1 {min_rho1:.3g}, min rho2/scale {min_rho2:.3g}")


def test_c09_eynard_mehta(report):
    t0 = time.perf_counter()
    model = em.gaussian_model(1.0, 1.0, 0.5, 2)
    rng = rng_stream(SEED)
    rho_dev = 0.0
    for _ in range(3):
        pts = list(4.0 * rng.uniform(size=2) - 2.0)
        dev, _ = cli.run_em(model, pts, QuadratureSpec())
        rho_dev = max(rho_dev, dev)
    bio = 0.0
    for N in range(1, 7):
        m = em.gaussian_model(1.0, 1.0, 0.5, N)
        sys_ = em.biorthogonalize(em.pairing_moments(m))
        bio = max(bio, em.biorthogonality_residual(sys_, gaussian_moments(1.0, 1.0, 0.5, N)))
    sys2 = em.biorthogonalize(em.pairing_moments(model))
    mass = integrate_1d(
        lambda x: em.em_kernel_block(sys2, model, 1, 1, x, x), -math.inf, math.inf, scale=2.0
    ).value
    dt = time.perf_counter() - t0
    ok = rho_dev < 1e-5 and bio < 1e-9 and abs(mass - 2.0) < 1e-6 and dt < 180
    report(
        "C09 Eynard-Mehta",
        ok,
        f"rho rel {rho_dev:.3g}, biorth {bio:.3g}, int rho10 - N {mass - 2.0:.3g}, {dt:.1f}s",
    )


def test_c10_structural_identity(report):
    rng = rng_stream(SEED)
    worst = 0.0
    for _ in range(20):
        n1, n2 = 2 + int(rng.integers(0, 4)), 2 + int(rng.integers(0, 4))
        H = 2.0 * rng.uniform(size=(n1, n2)) - 1.0
        w = 2.0 * rng.uniform(size=(n2, n1)) - 1.0
        mu1 = 0.1 + rng.uniform(size=n1)
        mu2 = 0.1 + rng.uniform(size=n2)
        K11, K12, K21, K22 = em.em_blocks_on_measure(H, w, mu1, mu2)
        # absorb the masses symmetrically so the grid-sum builder sees unit masses
        r1, r2 = np.sqrt(mu1), np.sqrt(mu2)
        Nt = nk.ntilde_discrete(r1[:, None] * H * r2[None, :], r2[:, None] * w * r1[None, :])
        # builder ordering (pos, neg): first-matrix nodes <-> positive grid
        pairs = [
            (Nt[:n1, :n1], r1[:, None] * K11 * r1[None, :]),
            (Nt[:n1, n1:], r1[:, None] * K12 * r2[None, :]),
            (Nt[n1:, :n1], r2[:, None] * K21 * r1[None, :]),
            (Nt[n1:, n1:], r2[:, None] * K22 * r2[None, :]),
        ]
        for got, want in pairs:
            worst = max(worst, float(np.max(np.abs(got - want))))
    report("C10 structural identity", worst < 1e-12, f"max abs {worst:.3g}")


def test_c11_monte_carlo(report):
    t0 = time.perf_counter()
    model = em.gaussian_model(1.0, 1.0, 0.5, 4)
    n = 10_000
    edges = np.linspace(-4.0, 4.0, 33)
    res = em.mc_sample(model, n, SEED, edges)
    sys_ = em.biorthogonalize(em.pairing_moments(model))
    g, gw = np.polynomial.legendre.leggauss(10)
    expected = np.empty(edges.size - 1)
    for i, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        x = 0.5 * (hi - lo) * g + 0.5 * (hi + lo)
        expected[i] = n * 0.5 * (hi - lo) * np.dot(gw, em.em_kernel_block(sys_, model, 1, 1, x, x))
    hist_sigma = float(np.max(np.abs(res.counts - expected) / np.sqrt(expected)))

    a, b, c = 1.0, 1.0, 0.5
    n1 = 100_000
    one = em.mc_sample(em.gaussian_model(a, b, c, 1), n1, SEED + 1)
    samples = np.column_stack([one.eig_A[:, 0], one.eig_B[:, 0]])
    cov_hat = np.cov(samples, rowvar=False)
    cov = np.linalg.inv(np.array([[2 * a, -c], [-c, 2 * b]]))
    # standard error of a sample covariance entry of a Gaussian
    se = np.sqrt((np.outer(np.diag(cov), np.diag(cov)) + cov**2) / n1)
    cov_sigma = float(np.max(np.abs(cov_hat - cov) / se))
    dt = time.perf_counter() - t0
    ok = hist_sigma < 5 and cov_sigma < 5 and dt < 120
    report("C11 Monte Carlo", ok, f"histogram {hist_sigma:.2f} sigma, covariance {cov_sigma:.2f} sigma, {dt:.1f}s")
