"""Numba/numpy backend selection for the hot kernels.

The integration kernels in :mod:`phgrid.kernels` are written in
njit-compatible numpy and decorated at import time.  Selection order:

* ``PHGRID_BACKEND=numpy`` in the environment forces the pure-numpy path
  (no compilation; identical semantics, much slower per step).
* otherwise numba is used when importable; if the import fails the numpy
  path is used and a one-line warning is emitted.

``benchmarks/compare_backends.py`` times the two paths against each other.
"""

import os
import warnings

_requested = os.environ.get("PHGRID_BACKEND", "numba").strip().lower()

if _requested not in ("numba", "numpy"):
    raise ValueError(f"PHGRID_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

NUMBA_ENABLED = False
if _requested == "numba":
    try:
        from numba import njit as _njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - exercised only without numba
        warnings.warn("numba not importable; falling back to the pure-numpy kernels")


def jit(func):
    """Apply @njit(cache=True, nogil=True) when the numba backend is active."""
    if NUMBA_ENABLED:
        return _njit(cache=True, nogil=True)(func)
    return func


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
