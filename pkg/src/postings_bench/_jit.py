"""Kernel compilation switch.

Hot loops are written once in the numba-compatible subset of Python.  With
numba available they are compiled with ``@njit``; setting
``POSTINGS_BENCH_DISABLE_JIT=1`` (or running without numba) leaves them as
plain Python and swaps the array-parallel kernels for their vectorised numpy
counterparts.
"""
import os

DISABLE_ENV = "POSTINGS_BENCH_DISABLE_JIT"

_disabled = os.environ.get(DISABLE_ENV, "").strip().lower() not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError
    from numba import njit as _njit
    JIT_ENABLED = True
except ImportError:
    _njit = None
    JIT_ENABLED = False

BACKEND = "numba" if JIT_ENABLED else "numpy"


def kernel(fn):
    if JIT_ENABLED:
        return _njit(cache=True, nogil=True)(fn)
    return fn


def choose(jit_impl, numpy_impl):
    """Pick the loop kernel when compiled, the vectorised one otherwise."""
    return kernel(jit_impl) if JIT_ENABLED else numpy_impl
