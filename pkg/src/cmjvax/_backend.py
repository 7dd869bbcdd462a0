"""Kernel backend selection.

Hot loops (tree generation, pruning, functional evaluation, special
functions) are written once as plain Python over numpy arrays and
compiled with numba when available.  Setting ``CMJVAX_DISABLE_NUMBA=1``
in the environment forces the interpreted fallback; both paths execute
the same statements in the same order and produce identical output.
"""

import os

_DISABLE = os.environ.get("CMJVAX_DISABLE_NUMBA", "").strip().lower() in (
    "1", "true", "yes", "on",
)

if not _DISABLE:
    try:
        import numba as _numba
    except ImportError:  # pragma: no cover - numba is a hard dep, but stay usable
        _numba = None
else:
    _numba = None

NUMBA_ENABLED = _numba is not None


def jit(func):
    """Compile ``func`` with numba when enabled, else return it unchanged."""
    if NUMBA_ENABLED:
        return _numba.njit(cache=True, nogil=True)(func)
    return func


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "python"
