"""Select the compiled kernels when available, else the numpy fallback.

Set ``MWKERNEL_PURE_PYTHON=1`` to force the fallback (used by the
benchmark and by the backend-parity tests).  ``repr_integral`` stays on the
numpy path either way: its cost is dominated by exp/log, where numpy's
vectorized loops beat scalar libm calls (see ``benchmarks/bench_kernels.py``).
"""
import os

from . import _pykernels

NAME = "python"
lu_det = _pykernels.lu_det
mute_sum = _pykernels.mute_sum
repr_integral = _pykernels.repr_integral

if not os.environ.get("MWKERNEL_PURE_PYTHON"):
    try:
        from . import _ckernels
    except ImportError:
        _ckernels = None
    if _ckernels is not None:
        NAME = "cython"
        lu_det = _ckernels.lu_det
        mute_sum = _ckernels.mute_sum
