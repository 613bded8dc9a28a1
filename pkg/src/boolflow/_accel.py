"""Numba switch.

Set ``BOOLFLOW_DISABLE_NUMBA=1`` before import to run every kernel through
the pure-numpy / pure-Python path.
"""

import os

_FLAG = os.environ.get("BOOLFLOW_DISABLE_NUMBA", "").strip().lower()
DISABLED_BY_ENV = _FLAG not in ("", "0", "false", "no")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not DISABLED_BY_ENV


def maybe_njit(func=None, **kwargs):
    """``numba.njit(cache=True)`` when enabled, identity otherwise."""
    opts = {"cache": True, **kwargs}

    def wrap(f):
        if USE_NUMBA:
            return numba.njit(**opts)(f)
        return f

    if func is not None:
        return wrap(func)
    return wrap
