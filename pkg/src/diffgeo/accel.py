"""Numba acceleration switch.

Hot kernels (Langevin chains, batched mixture posterior statistics) have two
implementations: an @njit one and a vectorized pure-numpy fallback.  The
fallback is selected when numba is unavailable or when the environment
variable ``DIFFGEO_DISABLE_NUMBA`` is set to a non-empty value other than
"0".  Both paths draw random numbers from the same legacy MT19937 stream, so
chains are bitwise identical across paths for a fixed seed.
"""

import os

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAS_NUMBA = False


def _env_disabled() -> bool:
    flag = os.environ.get("DIFFGEO_DISABLE_NUMBA", "")
    return flag not in ("", "0")


def numba_enabled() -> bool:
    """True when the @njit kernel path is active."""
    return HAS_NUMBA and not _env_disabled()


def njit(*args, **kwargs):
    """@njit when numba is importable, identity decorator otherwise.

    Decorated kernels are compiled lazily on first call, so importing this
    module stays cheap.  Callers must still check :func:`numba_enabled`
    before dispatching to a compiled kernel: the env flag is honored at call
    time, not at decoration time.
    """
    if HAS_NUMBA:
        return numba.njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]

    def deco(fn):
        return fn

    return deco
