"""Numba availability and backend selection.

Set ``BOSONCAP_DISABLE_NUMBA=1`` to force the pure-numpy kernels. The flag is
read on every dispatch so it can be toggled inside a running process.
"""
import os

try:
    from numba import njit

    numba_available = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_available = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return wrap


_FALSY = {"", "0", "false", "no", "off"}


def use_numba():
    """Return True when the numba kernels should be used."""
    if not numba_available:
        return False
    return os.environ.get("BOSONCAP_DISABLE_NUMBA", "").strip().lower() in _FALSY


def backend_name():
    return "numba" if use_numba() else "numpy"
