"""Numba dispatch.

Set ``FEEDBACK_MEDIATOR_DISABLE_NUMBA=1`` (or numba's own ``NUMBA_DISABLE_JIT=1``)
to run the vectorized numpy kernels instead of the compiled loops. The flag is
read once at import time.
"""

from __future__ import annotations

import os

_TRUTHY = {"1", "true", "yes", "on"}


def _flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in _TRUTHY


try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

NUMBA_AVAILABLE = _numba is not None
USE_NUMBA = NUMBA_AVAILABLE and not (
    _flag("FEEDBACK_MEDIATOR_DISABLE_NUMBA") or _flag("NUMBA_DISABLE_JIT")
)


def njit(func):
    """``numba.njit(cache=True)`` when numba is importable, else identity."""
    if _numba is None:
        return func
    return _numba.njit(cache=True)(func)
