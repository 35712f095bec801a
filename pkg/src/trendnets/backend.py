"""Numerical backend selection.

The solver's inner loop exists twice: a numba-compiled kernel and a plain
numpy implementation. Set TRENDNETS_BACKEND=numpy to force the fallback
(useful on machines where numba is unavailable or for benchmarking);
TRENDNETS_BACKEND=numba insists on the compiled path and raises if numba
cannot be imported.
"""

from __future__ import annotations

import os

_ENV_VAR = "TRENDNETS_BACKEND"

try:
    import numba  # noqa: F401

    _HAS_NUMBA = True
except ImportError:
    _HAS_NUMBA = False


def active_backend() -> str:
    """Return "numba" or "numpy" according to the env flag and availability."""
    choice = os.environ.get(_ENV_VAR, "").strip().lower()
    if choice == "numpy":
        return "numpy"
    if choice == "numba":
        if not _HAS_NUMBA:
            raise RuntimeError(f"{_ENV_VAR}=numba but numba is not importable")
        return "numba"
    if choice not in ("", "auto"):
        raise ValueError(f"unrecognized {_ENV_VAR}={choice!r} (use numba, numpy or auto)")
    return "numba" if _HAS_NUMBA else "numpy"


def set_num_threads(n: int) -> None:
    """Cap worker threads used by the compiled kernels. No-op on the numpy path."""
    if n < 1:
        raise ValueError("thread count must be >= 1")
    if _HAS_NUMBA:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
