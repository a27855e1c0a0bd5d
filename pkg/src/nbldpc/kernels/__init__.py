"""Hot loops behind a switchable backend.

``NBLDPC_BACKEND=numpy`` selects the vectorized numpy kernels; the default is
the numba kernels, with numpy as the fallback when numba is missing.
"""
import os
import warnings

from . import _numpy

_BACKENDS = {"numpy": _numpy}

try:
    from . import _numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    _numba = None
else:
    _BACKENDS["numba"] = _numba

_active = None


def set_backend(name: str) -> None:
    global _active
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name not in _BACKENDS:
        warnings.warn("numba is not importable; using the numpy kernels", RuntimeWarning)
        name = "numpy"
    _active = name


def backend() -> str:
    return _active


def impl(name: str | None = None):
    """Module holding the kernels of ``name`` (default: the active backend)."""
    return _BACKENDS[name or _active]


def available() -> list[str]:
    return sorted(_BACKENDS)


set_backend(os.environ.get("NBLDPC_BACKEND", "numba").strip().lower() or "numba")
