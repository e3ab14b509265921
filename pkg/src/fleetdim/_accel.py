"""Kernel acceleration switch.

Hot loops are written in a numba-compatible subset of Python. When numba is
importable and ``FLEETDIM_DISABLE_NUMBA`` is unset (or ``0``), they are compiled
with ``numba.njit``; otherwise the pure numpy/python path is used. The flag is
read once at import time.
"""
import os

_flag = os.environ.get("FLEETDIM_DISABLE_NUMBA", "").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError
    import numba

    NUMBA_ENABLED = True
except ImportError:
    numba = None
    NUMBA_ENABLED = False


def jit(func, fallback=None):
    """Compile ``func`` with numba when enabled.

    Otherwise return ``fallback`` (a vectorised numpy variant) when given, or
    ``func`` itself run as plain Python.
    """
    if NUMBA_ENABLED:
        return numba.njit(cache=True)(func)
    return fallback if fallback is not None else func

