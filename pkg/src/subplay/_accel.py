"""Optional numba acceleration.

Kernels are written twice: a numba-friendly loop version and a vectorised
numpy version. ``SUBPLAY_DISABLE_NUMBA=1`` (or a missing numba install)
selects the numpy path everywhere.
"""

import os

_flag = os.environ.get("SUBPLAY_DISABLE_NUMBA", "").strip().lower()
DISABLED = _flag in ("1", "true", "yes", "on")

try:
    from numba import njit as _njit
    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE and not DISABLED


def njit(func):
    """Compile ``func`` with numba when available, else return it untouched."""
    if NUMBA_AVAILABLE:
        return _njit(cache=True, nogil=True)(func)
    return func  # pragma: no cover


def select(nb_func, np_func):
    """Pick the active implementation of a kernel pair."""
    return nb_func if USE_NUMBA else np_func
