"""Numba switch shared by the hot kernels.

Set ``SBDG_NO_NUMBA=1`` before import to run every kernel through its
pure-numpy (or plain Python) fallback.
"""
import os

_flag = os.environ.get("SBDG_NO_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and _flag not in ("1", "true", "yes", "on")


def njit(func):
    """``numba.njit(cache=True, nogil=True)`` when enabled, identity otherwise."""
    if USE_NUMBA:
        return numba.njit(cache=True, nogil=True)(func)
    return func
