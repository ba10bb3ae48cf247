"""Kernel backend selection: numba-jitted hot loops with a numpy fallback.

The engines route their inner loops (trajectory ensembles, fixed-step
evolution, correlated-bath branches, RK4 integration) through one of two
interchangeable kernel modules:

* ``numba``  - ``@njit``-compiled loops, the default whenever numba imports.
* ``numpy``  - pure-numpy implementations of the same signatures.

Set the environment variable ``QCOLLIDE_BACKEND=numpy`` (or ``numba``) to
force a backend, or call :func:`use` at runtime (the benchmark and the
cross-backend tests do).  Both backends consume identical random streams
and agree to floating-point roundoff; per-backend results are bitwise
reproducible regardless of thread count.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

_ENV_VAR = "QCOLLIDE_BACKEND"
_VALID = ("numba", "numpy")

_active: str | None = None
_modules: dict[str, object] = {}


def numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def _load(name: str):
    if name not in _modules:
        if name == "numpy":
            from . import _kernels_numpy as mod
        else:
            from . import _kernels_numba as mod
        _modules[name] = mod
    return _modules[name]


def _resolve_default() -> str:
    env = os.environ.get(_ENV_VAR, "").strip().lower()
    if env:
        if env not in _VALID:
            raise ValueError(
                f"{_ENV_VAR} must be one of {_VALID}, got {env!r}"
            )
        if env == "numba" and not numba_available():
            warnings.warn(
                "QCOLLIDE_BACKEND=numba requested but numba is not importable; "
                "falling back to the numpy backend",
                RuntimeWarning,
                stacklevel=3,
            )
            return "numpy"
        return env
    if numba_available():
        return "numba"
    warnings.warn(
        "numba is not importable; using the slower pure-numpy kernel backend",
        RuntimeWarning,
        stacklevel=3,
    )
    return "numpy"


def active() -> str:
    """Name of the backend currently in use."""
    global _active
    if _active is None:
        _active = _resolve_default()
    return _active


def use(name: str) -> None:
    """Switch backends at runtime (mainly for tests and benchmarks)."""
    global _active
    if name not in _VALID:
        raise ValueError(f"backend must be one of {_VALID}, got {name!r}")
    if name == "numba" and not numba_available():
        raise RuntimeError("numba backend requested but numba is not importable")
    _active = name


def kernels():
    """The active kernel module."""
    return _load(active())


def kernel_array(a) -> np.ndarray:
    """Writable C-contiguous complex128 copy for kernel calls.

    The validated wrappers hand out read-only matrices; copying here keeps
    every jit kernel at a single compiled signature.
    """
    return np.array(a, dtype=np.complex128, order="C")


def set_threads(n: int) -> None:
    """Set engine parallelism: ``n`` threads, or 0 for the automatic default.

    Only the numba backend runs kernels in parallel; results are identical
    for every thread count (trajectory and branch reductions use a fixed
    block order).  A no-op on the numpy backend.
    """
    if n < 0:
        raise ValueError(f"thread count must be non-negative, got {n}")
    if active() != "numba":
        return
    import numba

    limit = numba.config.NUMBA_NUM_THREADS
    numba.set_num_threads(limit if n == 0 else min(n, limit))
