"""Backend selection for the numeric kernels.

Set ``QREPEATER_DISABLE_NUMBA=1`` (or numba's own ``NUMBA_DISABLE_JIT=1``) to
force the pure-numpy code paths.
"""

import os

DISABLE_ENV = "QREPEATER_DISABLE_NUMBA"


def _flag(name):
    return os.environ.get(name, "").strip().lower() not in ("", "0", "false", "no")


def numba_available():
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USE_NUMBA = numba_available() and not (_flag(DISABLE_ENV) or _flag("NUMBA_DISABLE_JIT"))


def njit(fn):
    """``numba.njit(cache=True)`` when numba is importable, identity otherwise."""
    if not numba_available():
        return fn
    import numba

    return numba.njit(cache=True)(fn)
