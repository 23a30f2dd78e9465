"""Select between numba-compiled kernels and the pure-numpy fallback.

Set ``RINGLINK_DISABLE_NUMBA=1`` before import to force the numpy path.
"""

import os

_FLAG = "RINGLINK_DISABLE_NUMBA"

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_AVAILABLE = numba is not None
NUMBA_ENABLED = NUMBA_AVAILABLE and os.environ.get(_FLAG, "").strip().lower() not in {
    "1",
    "true",
    "yes",
    "on",
}


def njit(fn=None, **options):
    """Compile ``fn`` in nopython mode when numba is importable.

    Usable bare (``@njit``) or with numba options (``@njit(fastmath=True)``).

    The decorated function is always the compiled one when numba exists, so
    both paths stay testable regardless of the env flag; dispatch happens in
    :mod:`ringlink.kernels`.
    """
    if fn is None:
        return lambda f: njit(f, **options)
    if numba is None:  # pragma: no cover
        return fn
    return numba.njit(cache=True, **options)(fn)
