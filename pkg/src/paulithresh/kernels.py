"""Selects the compiled kernels when available, else the numpy fallback.

Set ``PAULITHRESH_PURE=1`` to force the fallback.
"""
from __future__ import annotations

import os
from types import ModuleType

from . import _kernels_py

__all__ = ["BACKEND", "grid_entropy", "coset_entropy_sum", "backend"]


def backend(name: str | None = None) -> ModuleType:
    """Return the kernel module ``"cython"`` or ``"numpy"`` (default: best available)."""
    if name == "numpy":
        return _kernels_py
    if name not in (None, "cython"):
        raise ValueError(f"unknown kernel backend {name!r}")
    try:
        from . import _ckernels
    except ImportError:
        if name == "cython":
            raise
        return _kernels_py
    return _ckernels


if os.environ.get("PAULITHRESH_PURE"):
    _impl = _kernels_py
    BACKEND = "numpy"
else:
    _impl = backend()
    BACKEND = "cython" if _impl is not _kernels_py else "numpy"

grid_entropy = _impl.grid_entropy
coset_entropy_sum = _kernels_py.coset_entropy_sum
