"""Backend selection for the numeric kernels.

``MODEL_T_BACKEND=numba`` (the default) compiles the hot loops with
``numba.njit``; ``MODEL_T_BACKEND=numpy`` selects the pure-numpy
implementations.  If numba cannot be imported the numpy path is used
regardless of the variable.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is optional
    numba = None

NUMBA_AVAILABLE = numba is not None

_requested = os.environ.get("MODEL_T_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"MODEL_T_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

BACKEND = "numba" if (_requested == "numba" and NUMBA_AVAILABLE) else "numpy"


def njit(func):
    """Compiled twin of ``func``, or None when numba is unavailable.

    Compilation is lazy, so defining the twin costs nothing until it runs.
    """
    if not NUMBA_AVAILABLE:
        return None
    return numba.njit(cache=True, nogil=True)(func)


def pick(numba_impl, numpy_impl):
    return numba_impl if BACKEND == "numba" else numpy_impl
