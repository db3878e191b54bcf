"""Backend switch for the numeric kernels.

Kernels are compiled with numba when it is importable, unless the
environment variable ``KLRISK_NO_JIT`` is set to a truthy value, in which
case the pure Python / numpy implementations run instead.  The flag is read
once at import time.
"""
import os

_FLAG = os.environ.get("KLRISK_NO_JIT", "").strip().lower()
DISABLED = _FLAG not in ("", "0", "false", "no", "off")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

ENABLED = numba is not None and not DISABLED
BACKEND = "numba" if ENABLED else "numpy"


def jit(fn):
    """Compile ``fn`` in nopython mode when the numba backend is active."""
    if ENABLED:
        return numba.njit(cache=True)(fn)
    return fn


def accelerated(fallback):
    """Use the decorated loop kernel under numba, ``fallback`` otherwise.

    The loop version is written for numba; interpreted, it would be far
    slower than a vectorised numpy equivalent, hence the explicit fallback.
    """
    def wrap(fn):
        if ENABLED:
            return numba.njit(cache=True)(fn)
        return fallback
    return wrap
