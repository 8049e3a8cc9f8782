"""Kernel backend selection.

Hot inner loops are written as plain Python functions over numpy arrays and
wrapped with numba's ``@njit`` when available.  Setting the environment
variable ``NASHPROX_BACKEND=numpy`` before import skips the JIT and runs the
same functions as pure numpy/Python -- useful on platforms without numba and
for benchmarking the two paths against each other.
"""

import os

_requested = os.environ.get("NASHPROX_BACKEND", "").strip().lower()

if _requested not in ("", "numba", "numpy"):
    raise RuntimeError(
        f"NASHPROX_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )

if _requested == "numpy":
    HAS_NUMBA = False
else:
    try:
        import numba  # noqa: F401

        HAS_NUMBA = True
    except ImportError:
        if _requested == "numba":
            raise
        HAS_NUMBA = False

BACKEND = "numba" if HAS_NUMBA else "numpy"


def jit_kernel(func):
    """Wrap a kernel with ``@njit(cache=True)`` on the numba backend."""
    if HAS_NUMBA:
        from numba import njit

        return njit(cache=True)(func)
    return func
