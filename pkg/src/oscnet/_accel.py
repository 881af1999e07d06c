"""Optional numba acceleration.

Hot kernels are written in the numba-compatible subset of Python and wrapped
with :func:`jit`.  Setting ``OSCNET_NUMBA=0`` in the environment (or running
without numba installed) leaves them as plain Python functions operating on
numpy arrays.  Both paths produce bit-identical results.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

_flag = os.environ.get("OSCNET_NUMBA", "1").strip().lower()
USE_NUMBA = numba is not None and _flag not in ("0", "false", "no", "off")


def jit(fn):
    if USE_NUMBA:
        return numba.njit(cache=True)(fn)
    return fn


def backend_name() -> str:
    return "numba" if USE_NUMBA else "python"
