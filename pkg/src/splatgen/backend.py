"""Numeric backend selection.

Hot kernels (splat rasterization, density grids, mesh rasterization) ship in
two implementations: numba @njit loops and pure vectorized numpy. The active
backend is chosen once at import from the ``SPLATGEN_BACKEND`` environment
variable:

    SPLATGEN_BACKEND=auto    numba when importable, numpy otherwise (default)
    SPLATGEN_BACKEND=numba   require numba, fail loudly if missing
    SPLATGEN_BACKEND=numpy   force the pure-numpy path

Tests and benchmarks may switch at runtime with :func:`use_backend`.
Both paths implement the same contracts; see benchmarks/bench_backends.py
for a speed comparison.
"""

from __future__ import annotations

import os
from contextlib import contextmanager

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False


def _resolve(requested: str) -> str:
    requested = requested.strip().lower()
    if requested in ("", "auto"):
        return "numba" if HAVE_NUMBA else "numpy"
    if requested == "numba":
        if not HAVE_NUMBA:
            raise ImportError(
                "SPLATGEN_BACKEND=numba requested but numba is not importable"
            )
        return "numba"
    if requested == "numpy":
        return "numpy"
    raise ValueError(
        f"SPLATGEN_BACKEND must be auto, numba or numpy, got {requested!r}"
    )


_active = _resolve(os.environ.get("SPLATGEN_BACKEND", "auto"))


def active_backend() -> str:
    """Name of the backend kernels currently dispatch to."""
    return _active


def set_backend(name: str) -> None:
    global _active
    _active = _resolve(name)


@contextmanager
def use_backend(name: str):
    """Temporarily switch backends (used by equivalence tests and benchmarks)."""
    previous = _active
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)
