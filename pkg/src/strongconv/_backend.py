"""Selects the compiled (numba) or pure-numpy implementation of the hot kernels.

Set ``STRONGCONV_DISABLE_NUMBA=1`` to force the numpy fallback, e.g. on
platforms without a working LLVM or to compare the two paths.
"""
import os

_FALSY = {"", "0", "false", "no", "off"}

USE_NUMBA = os.environ.get("STRONGCONV_DISABLE_NUMBA", "").strip().lower() in _FALSY

if USE_NUMBA:
    try:
        import numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USE_NUMBA = False


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
