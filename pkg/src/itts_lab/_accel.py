"""Backend selection for the hot kernels.

Kernels are written twice: a numba ``@njit`` version and a pure-numpy
version. Setting ``ITTS_LAB_DISABLE_NUMBA=1`` before import (or running
without numba installed) routes every dispatcher to the numpy path.
"""

import os

try:
    import numba
except ModuleNotFoundError:  # pragma: no cover
    numba = None

_DISABLED = os.environ.get("ITTS_LAB_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not _DISABLED


def njit(f=None, **options):
    """``numba.njit`` with ``cache``/``nogil`` on; identity when numba is absent."""
    options.setdefault("cache", True)
    options.setdefault("nogil", True)
    if not HAVE_NUMBA:
        return f if f is not None else (lambda g: g)
    if f is None:
        return lambda g: numba.njit(g, **options)
    return numba.njit(f, **options)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
