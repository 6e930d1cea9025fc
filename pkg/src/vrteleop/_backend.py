"""Kernel backend selection.

``VRTELEOP_BACKEND=numpy`` forces the pure-numpy kernels even when numba is
importable. Anything else (or unset) uses numba when available.
"""
import os

_requested = os.environ.get("VRTELEOP_BACKEND", "numba").strip().lower()

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    HAS_NUMBA = False

BACKEND = "numba" if (HAS_NUMBA and _requested != "numpy") else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` with caching on; identity decorator when numba is absent."""
    if not HAS_NUMBA:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    import numba

    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)
