"""Numba switch shared by the kernel module.

Set ``SPECWASS_DISABLE_JIT=1`` before import to run every kernel through its
pure Python / numpy path. The flag is read once, at import time.
"""
import os

_FALSY = ("", "0", "false", "no", "off")

DISABLE_JIT = os.environ.get("SPECWASS_DISABLE_JIT", "0").strip().lower() not in _FALSY

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

JIT_ENABLED = numba is not None and not DISABLE_JIT


def jit(f):
    """``numba.njit(cache=True)`` when JIT is enabled, identity otherwise."""
    if not JIT_ENABLED:
        return f
    return numba.njit(cache=True)(f)
