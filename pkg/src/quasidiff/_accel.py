"""Optional numba acceleration.

Set ``QUASIDIFF_DISABLE_NUMBA=1`` to force the pure-numpy code paths; this
is read once at import time.
"""
import os

_disabled = os.environ.get("QUASIDIFF_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _disabled:
        raise ImportError("numba disabled by QUASIDIFF_DISABLE_NUMBA")
    import numba
    from numba import njit, prange

    USING_NUMBA = True
except ImportError:
    numba = None
    USING_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f

    prange = range


def set_threads(n):
    """Cap the number of worker threads used by parallel kernels."""
    if USING_NUMBA and n:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
