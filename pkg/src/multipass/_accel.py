"""Numba switch.

Kernels are written once as plain Python loops and compiled with numba when
it is importable.  Setting ``MULTIPASS_DISABLE_NUMBA=1`` forces the fallback:
vectorizable kernels then dispatch to numpy implementations, and the
pointer-chasing heap kernels run as ordinary Python over numpy arrays.
"""

import os

DISABLED = os.environ.get("MULTIPASS_DISABLE_NUMBA", "").strip() not in ("", "0")

try:
    if DISABLED:
        raise ImportError("numba disabled by MULTIPASS_DISABLE_NUMBA")
    import numba as _numba

    HAVE_NUMBA = True
except ImportError:
    _numba = None
    HAVE_NUMBA = False


def njit(func):
    """Compile ``func`` in nopython mode if numba is active, else return it unchanged."""
    if HAVE_NUMBA:
        return _numba.njit(cache=True)(func)
    func.py_func = func
    return func


def backend():
    return "numba" if HAVE_NUMBA else "numpy"
