"""Compilation toggle for the hot kernels.

The kernels in this package are written as plain Python loops over numpy
arrays so the exact same source runs in two lanes: compiled with numba
(the default) or interpreted as a pure numpy/Python fallback.  Set
``SIMPACK_JIT=0`` to force the fallback lane; it is also selected
automatically when numba is not importable.  ``python -m
simpack.kernel_bench`` times one lane against the other.
"""

import os

__all__ = ["JIT_ENABLED", "njit"]


def _jit_requested() -> bool:
    value = os.environ.get("SIMPACK_JIT", "1").strip().lower()
    return value not in ("0", "false", "off", "no")


JIT_ENABLED = False
_numba_njit = None

if _jit_requested():
    try:
        from numba import njit as _numba_njit

        JIT_ENABLED = True
    except ImportError:
        JIT_ENABLED = False


if JIT_ENABLED:

    def njit(func=None, **kwargs):
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        decorator = _numba_njit(**kwargs)
        if func is None:
            return decorator
        return decorator(func)

else:

    def njit(func=None, **kwargs):
        if func is None:
            return lambda f: f
        return func
