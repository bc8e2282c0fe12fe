"""Command-line front end (``mwkernel``).

Exit codes: 0 success, 1 numerical or verification failure, 2 invalid
input, 3 I/O error.  JSON records carry ``schema_version``; floats are
printed with 17 significant digits.  The default quadrature tolerance comes
from ``MWKERNEL_QUAD_RTOL`` (``--rtol`` overrides).

Negative point lists need the ``--points=-1.0,2`` form.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys

import numpy as np

from . import eynard_mehta as em
from . import necklace as nk
from . import specfun
from . import whittaker_kernel as wk
from .numerics import DegeneratePairingError, QuadratureError, QuadratureSpec, RngStream

SCHEMA_VERSION = 1
ENV_RTOL = "MWKERNEL_QUAD_RTOL"
DEFAULT_RTOL = 1e-10

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_IO = 0, 1, 2, 3


class InputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# output helpers


def _fmt(v) -> str:
    return "%.17g" % v


def to_json(obj) -> str:
    """JSON text with every float at 17 significant digits."""
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return _fmt(v) if math.isfinite(v) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{to_json(str(k))}: {to_json(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, np.ndarray):
        return to_json(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(to_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit(record: dict, out) -> None:
    out.write(to_json({"schema_version": SCHEMA_VERSION, **record}) + "\n")


# ---------------------------------------------------------------------------
# argument helpers


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"cannot parse number list {text!r}") from None
    if not all(math.isfinite(v) for v in vals):
        raise InputError(f"non-finite value in {text!r}")
    return vals


def _spec(args) -> QuadratureSpec:
    rtol = args.rtol
    if rtol is None:
        env = os.environ.get(ENV_RTOL)
        try:
            rtol = float(env) if env else DEFAULT_RTOL
        except ValueError:
            raise InputError(f"{ENV_RTOL}={env!r} is not a number") from None
    if not rtol > 0:
        raise InputError(f"quadrature rtol must be positive, got {rtol}")
    return QuadratureSpec(rel_tol=rtol)


def _params(args) -> wk.KernelParams:
    return wk.validate_params(args.z, args.zp)


def _points(args) -> list[float]:
    pts = _float_list(args.points)
    if not pts:
        raise InputError("--points needs at least one value")
    if any(v == 0 for v in pts):
        raise InputError("points must be nonzero (the phase space excludes 0)")
    return pts


def _params_record(p: wk.KernelParams) -> dict:
    return {"z": p.z, "zp": p.zp, "t": p.t, "m": p.m}


# ---------------------------------------------------------------------------
# commands


def cmd_wfun(args, out) -> int:
    if not args.x > 0:
        raise InputError(f"precondition x > 0 violated (x={args.x})")
    v = specfun.whittaker_w(args.kappa, args.mu, args.x)
    if args.format == "csv":
        out.write("kappa,mu,x,value\n" + ",".join(_fmt(u) for u in (args.kappa, args.mu, args.x, v)) + "\n")
    else:
        _emit({"kappa": args.kappa, "mu": args.mu, "x": args.x, "value": v}, out)
    return EXIT_OK


def cmd_kernel(args, out) -> int:
    p = _params(args)
    pts = _points(args)
    K = wk.kernel_matrix(p, pts)
    _emit({"params": _params_record(p), "points": pts, "value": K}, out)
    return EXIT_OK


def cmd_corr(args, out) -> int:
    p = _params(args)
    pts = _points(args)
    _emit({"params": _params_record(p), "points": pts, "value": wk.correlation(p, pts)}, out)
    return EXIT_OK


def cmd_grid(args, out) -> int:
    p = _params(args)
    if not args.xmin < args.xmax:
        raise InputError(f"need xmin < xmax (got {args.xmin}, {args.xmax})")
    if args.n < 1:
        raise InputError("--n must be >= 1")
    xs = np.linspace(args.xmin, args.xmax, args.n)
    if np.any(xs == 0):
        raise InputError("grid contains 0; shift xmin/xmax or change n")
    rho = wk.rho1_profile(p, xs)
    buf = io.StringIO()
    buf.write("x,rho1\n")
    for x, r in zip(xs, rho):
        buf.write(f"{_fmt(x)},{_fmt(r)}\n")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(buf.getvalue())
    else:
        out.write(buf.getvalue())
    return EXIT_OK


# -- verification suites ----------------------------------------------------


def _report(out, check, trials, max_residual, threshold, offending=None) -> int:
    ok = bool(max_residual < threshold)
    rec = {"check": check, "trials": trials, "max_residual": max_residual, "threshold": threshold, "pass": ok}
    if not ok and offending is not None:
        rec["offending"] = offending
    _emit(rec, out)
    return EXIT_OK if ok else EXIT_FAIL


def necklace_deviation(dk, points) -> float:
    """Relative |lhs - rhs|; for coincident points (rhs exactly 0) the
    deviation is taken relative to the Hadamard bound of the matrix."""
    lhs = nk.necklace_lhs(dk, points)
    rhs = nk.necklace_rhs(dk, points)
    if rhs != 0.0:
        return abs(lhs - rhs) / abs(rhs)
    full = nk.ntilde_discrete(dk.N, dk.w)
    n_pos = dk.pos_grid.size
    idx = [i if pos else n_pos + i for pos, i in (dk.locate(x) for x in points)]
    sub = full[np.ix_(idx, idx)]
    scale = float(np.prod(np.linalg.norm(sub, axis=1)))
    return abs(lhs - rhs) / scale if scale > 0 else abs(lhs - rhs)


def run_necklace(trials, seed, max_n=4):
    rng = RngStream(seed)
    worst, bad = 0.0, None
    for _ in range(trials):
        dk = nk.DiscreteKernelPair.random(rng)
        for n in range(1, max_n + 1):
            for signs in itertools.product((True, False), repeat=n):
                pts = _distinct_points(rng, dk, signs)
                dev = necklace_deviation(dk, pts)
                if dev > worst:
                    worst, bad = dev, {"instance": dk.to_dict(), "points": pts}
    return worst, bad


def _distinct_points(rng, dk, signs):
    # distinct grid points per sign while the grid allows it, then repeats
    out = []
    pools = {True: [], False: []}
    for s in signs:
        grid = dk.pos_grid if s else dk.neg_grid
        used = pools[s]
        free = [i for i in range(grid.size) if i not in used]
        choice = free[int(rng.integers(0, len(free)))] if free else int(rng.integers(0, grid.size))
        used.append(choice)
        out.append(float(grid[choice]))
    return out


def run_laplace(trials, seed, size=6, max_kl=4):
    rng = RngStream(seed)
    worst, bad = 0.0, None
    for _ in range(trials):
        M = 2.0 * rng.uniform(size=(size, size)) - 1.0
        ref = float(np.linalg.det(M))
        for k in range(max_kl + 1):
            for l in range(max_kl + 1 - k):
                if k + l == 0:
                    continue
                dev = abs(nk.laplace_expand(M, k, l) - ref) / abs(ref)
                if dev > worst:
                    worst, bad = dev, {"matrix": M, "k": k, "l": l}
    return worst, bad


def run_jsym(p, trials, seed):
    rng = RngStream(seed)
    pairs = 10.0 * (1.0 - rng.uniform(size=(trials, 2)))  # in (0, 10]
    rep = wk.verify_j_symmetry(p, pairs)
    return rep.max_violation, {"params": _params_record(p), "pairs": pairs}


def run_stieltjes(p, points, spec):
    worst, bad = 0.0, None
    for x in points:
        for y in points:
            rep = wk.verify_stieltjes_consistency(p, x, y, spec)
            if rep.max_residual > worst:
                worst, bad = rep.max_residual, {"params": _params_record(p), "x": x, "y": y}
    return worst, bad


def run_em(model, points, spec):
    M = em.pairing_moments(model, spec)
    sys_ = em.biorthogonalize(M)
    worst, bad = 0.0, None
    for (k, l) in ((1, 0), (0, 1), (1, 1), (2, 0), (0, 2)):
        x1 = points[:k]
        x2 = points[k : k + l] if k + l <= len(points) else points[:l]
        q = em.CorrelationQuery.make(x1, x2)
        a = em.rho_kl(sys_, model, q, spec)
        b = em.brute_force_rho(model, q)
        dev = abs(a - b) / abs(b)
        if dev > worst:
            worst, bad = dev, {"model": model.to_dict(), "x1": list(q.x1), "x2": list(q.x2)}
    return worst, bad


MOMENT_LATTICE = [
    (a, b, c)
    for a in (0.0, 0.3, -0.2, 0.9, 1.6)
    for b, c in ((1.0, 1.0), (1.2, 0.9), (0.8, 0.5), (2.5, 1.7))
]


def run_moment():
    worst, bad = 0.0, None
    for a, b, c in MOMENT_LATTICE:
        r = specfun.moment_identity_residual(a, b, c)
        if r > worst:
            worst, bad = r, {"a": a, "b": b, "c": c}
    return worst, bad


def cmd_verify(args, out) -> int:
    which = args.check
    if which == "necklace":
        worst, bad = run_necklace(args.trials, args.seed)
        return _report(out, which, args.trials, worst, 1e-10, bad)
    if which == "laplace":
        worst, bad = run_laplace(args.trials, args.seed)
        return _report(out, which, args.trials, worst, 1e-12, bad)
    if which == "jsym":
        worst, bad = run_jsym(_params(args), args.trials, args.seed)
        return _report(out, which, args.trials, worst, 1e-8, bad)
    if which == "stieltjes":
        pts = _float_list(args.points) if args.points else [0.5, 1.0, 2.0, 5.0]
        if not pts or any(v <= 0 for v in pts):
            raise InputError("stieltjes points must be positive")
        worst, bad = run_stieltjes(_params(args), pts, _spec(args))
        return _report(out, which, len(pts) ** 2, worst, 1e-6, bad)
    if which == "em":
        model = em.gaussian_model(1.0, 1.0, 0.5, 2) if args.model is None else _load_model(args.model)
        pts = _float_list(args.points) if args.points else [0.3, -0.7]
        if len(pts) < 2:
            raise InputError("em verification needs two points")
        worst, bad = run_em(model, pts, _spec(args))
        return _report(out, which, 5, worst, 1e-5, bad)
    if which == "moment":
        worst, bad = run_moment()
        return _report(out, which, len(MOMENT_LATTICE), worst, 1e-8, bad)
    raise InputError(f"unknown check {which!r}")


# -- two-matrix model -------------------------------------------------------


def _load_model(path) -> em.TwoMatrixModel:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"model file {path} is not valid JSON: {exc}") from None
    return em.TwoMatrixModel.from_dict(obj).validate()


def cmd_em(args, out) -> int:
    model = _load_model(args.model)
    spec = _spec(args)
    if args.action == "moments":
        _emit({"model": model.to_dict(), "moments": em.pairing_moments(model, spec)}, out)
        return EXIT_OK
    if args.action == "rho":
        x1 = _float_list(args.x1) if args.x1 else []
        x2 = _float_list(args.x2) if args.x2 else []
        q = em.CorrelationQuery.make(x1, x2)
        if q.k > model.N or q.l > model.N:
            raise InputError(f"at most N={model.N} points per matrix")
        sys_ = em.biorthogonalize(em.pairing_moments(model, spec))
        _emit({"model": model.to_dict(), "x1": x1, "x2": x2, "value": em.rho_kl(sys_, model, q, spec)}, out)
        return EXIT_OK
    if args.action == "mc":
        if args.samples < 1:
            raise InputError("--samples must be >= 1")
        res = em.mc_sample(model, args.samples, args.seed)
        if args.out:
            em.write_samples_csv(args.out, res)
        else:
            buf = io.StringIO()
            wr = csv.writer(buf, lineterminator="\n")
            N = model.N
            wr.writerow([f"a{i}" for i in range(N)] + [f"b{i}" for i in range(N)])
            for ra, rb in zip(res.eig_A, res.eig_B):
                wr.writerow([_fmt(v) for v in ra] + [_fmt(v) for v in rb])
            out.write(buf.getvalue())
        return EXIT_OK
    raise InputError(f"unknown em action {args.action!r}")


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mwkernel", description=__doc__.splitlines()[0])
    ap.add_argument("--rtol", type=float, default=None, help=f"quadrature rel. tolerance (env {ENV_RTOL})")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("wfun", help="Whittaker function W_{kappa,mu}(x)")
    p.add_argument("--kappa", type=float, default=0.0)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_wfun)

    for name, fn, hlp in (
        ("kernel", cmd_kernel, "kernel matrix K(x_i, x_j)"),
        ("corr", cmd_corr, "correlation function det K(x_i, x_j)"),
    ):
        p = sub.add_parser(name, help=hlp)
        p.add_argument("--z", type=float, required=True)
        p.add_argument("--zp", type=float, required=True)
        p.add_argument("--points", required=True, help="comma list; use --points=-1,2 for negatives")
        p.set_defaults(func=fn)

    p = sub.add_parser("grid", help="CSV of the one-point function on a uniform grid")
    p.add_argument("--z", type=float, required=True)
    p.add_argument("--zp", type=float, required=True)
    p.add_argument("--xmin", type=float, required=True)
    p.add_argument("--xmax", type=float, required=True)
    p.add_argument("--n", type=int, default=101)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("check", choices=("necklace", "laplace", "jsym", "stieltjes", "em", "moment"))
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--z", type=float, default=-0.3)
    p.add_argument("--zp", type=float, default=-0.6)
    p.add_argument("--points", default=None)
    p.add_argument("--model", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("em", help="two-matrix model: moments, correlations, Monte Carlo")
    p.add_argument("action", choices=("moments", "rho", "mc"))
    p.add_argument("--model", required=True)
    p.add_argument("--x1", default=None)
    p.add_argument("--x2", default=None)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_em)
    return ap


_DEFAULT_TRIALS = {"necklace": 50, "laplace": 20, "jsym": 100}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if getattr(args, "command", None) == "verify" and args.trials is None:
        args.trials = _DEFAULT_TRIALS.get(args.check, 0)
    if getattr(args, "trials", None) is not None and args.trials < 0:
        print("error: --trials must be >= 0", file=sys.stderr)
        return EXIT_INPUT
    if getattr(args, "seed", None) is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be a 64-bit unsigned integer", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args, out)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (InputError, wk.ParameterError, wk.UnsupportedModeError, specfun.DomainError, em.InvalidModelError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DegeneratePairingError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (QuadratureError, ArithmeticError, specfun.PoleError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
