"""Numba shim.

Kernels are compiled with ``numba.njit`` when numba is importable; otherwise
they run as plain Python (slow, but numerically identical).
"""

try:
    from numba import njit as _numba_njit
except ImportError:  # pragma: no cover
    _numba_njit = None


def njit(fn):
    if _numba_njit is None:  # pragma: no cover
        return fn
    return _numba_njit(cache=True, nogil=True)(fn)
