"""Backend selection for the numeric kernels.

The hot loops are written twice: once as numba ``@njit`` kernels and once as
vectorised numpy. The numba path is used when numba imports and the
environment variable ``GPDOPT_DISABLE_NUMBA`` is unset or falsy. Set it to
``1`` to force the pure-numpy path (useful for debugging and for checking
that both paths agree).
"""

import os

_FALSY = {"", "0", "false", "no", "off"}


def _env_disabled():
    return os.environ.get("GPDOPT_DISABLE_NUMBA", "").strip().lower() not in _FALSY


try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _env_disabled()


def njit(fn):
    """Compile ``fn`` with numba when available, else return it untouched.

    Compilation happens even when ``USE_NUMBA`` is off so that the benchmark
    can still compare both paths; dispatch decides which one runs.
    """
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
