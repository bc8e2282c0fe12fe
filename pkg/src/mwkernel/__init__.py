"""Matrix Whittaker kernel, determinantal correlation functions and the
two-coupled-matrix biorthogonal kernel, with brute-force oracles."""
from . import _backend
from .specfun import gamma, phi, pochhammer, whittaker_w, whittaker_w_deriv
from .whittaker_kernel import (
    Configuration,
    KernelParams,
    SignedPoint,
    correlation,
    kernel,
    kernel_diag,
    ntilde,
    validate_params,
)

__version__ = "0.1.0"
BACKEND = _backend.NAME

__all__ = [
    "BACKEND",
    "Configuration",
    "KernelParams",
    "SignedPoint",
    "correlation",
    "gamma",
    "kernel",
    "kernel_diag",
    "ntilde",
    "phi",
    "pochhammer",
    "validate_params",
    "whittaker_w",
    "whittaker_w_deriv",
]
