"""Kernel backend selection.

Set ``MEMS_SIM_NUMBA=0`` to force the pure-numpy kernels. Numba is used
otherwise, when importable.
"""

import os
import warnings

_FLAG = os.environ.get("MEMS_SIM_NUMBA", "1").strip().lower()
_REQUESTED = _FLAG not in ("0", "false", "no", "off")

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def decorator(func):
            return func

        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return decorator

    if _REQUESTED:
        warnings.warn("numba could not be imported; falling back to numpy kernels")

USE_NUMBA = HAVE_NUMBA and _REQUESTED


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
