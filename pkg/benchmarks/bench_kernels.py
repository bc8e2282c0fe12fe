"""Compiled core vs pure-Python fallback on the three hot kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each row reports the best-of-``repeat`` wall time per call for both
backends, the speedup, and the largest relative disagreement between them.
"""
import argparse
import timeit

import numpy as np

from mwkernel import _pykernels, specfun

try:
    from mwkernel import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def cases():
    rng = np.random.default_rng(0)
    m8 = rng.normal(size=(8, 8))
    yield "lu_det 8x8", "lu_det", (m8,)

    N = rng.uniform(-1, 1, (6, 6))
    w = rng.uniform(-1, 1, (6, 6))
    r = np.array([0, -1, -1], dtype=np.int64)
    s = np.array([2, -1, 1], dtype=np.int64)
    yield "mute_sum d=3, 3 mute slots, 6x6 grids", "mute_sum", (N, w, r, s)

    x = np.geomspace(1e-3, 50.0, 200)
    jt, jw = specfun._jacobi_rule(0.65)
    yield (
        "repr_integral 200 points",
        "repr_integral",
        (0.65, -0.35, x, jt, jw, specfun._GL_T, specfun._GL_W, specfun._LAG_T, specfun._LAG_W),
    )


def best_time(fn, args, repeat):
    timer = timeit.Timer(lambda: fn(*args))
    number, _ = timer.autorange()
    return min(timer.repeat(repeat=repeat, number=number)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not available; build with `python3 setup.py build_ext --inplace`")
        return 1
    print(f"{'case':42s} {'python':>12s} {'cython':>12s} {'speedup':>8s} {'max rel diff':>13s}")
    for label, name, fargs in cases():
        py, cy = getattr(_pykernels, name), getattr(_ckernels, name)
        a = np.atleast_1d(py(*fargs))
        b = np.atleast_1d(cy(*fargs))
        diff = float(np.max(np.abs(a - b) / np.maximum(np.abs(a), 1e-300)))
        tp = best_time(py, fargs, args.repeat)
        tc = best_time(cy, fargs, args.repeat)
        print(f"{label:42s} {tp * 1e6:10.1f}us {tc * 1e6:10.1f}us {tp / tc:8.1f} {diff:13.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
