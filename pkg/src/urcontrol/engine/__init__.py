"""Engine selection: compiled kernels when available, numpy otherwise.

Set the environment variable ``URCONTROL_PURE_PYTHON=1`` before import to
force the numpy implementation even when the extension is built.  The active
choice is exposed as ``BACKEND`` ("compiled" or "numpy").
"""
from __future__ import annotations

import os

from . import numpy_backend
from .numpy_backend import (
    m0_matrix,
    riemann_averaged_ops,
    riemann_grid_propagators,
    riemann_m0_matrix,
)

if os.environ.get("URCONTROL_PURE_PYTHON"):
    _impl = numpy_backend
    BACKEND = "numpy"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = numpy_backend
        BACKEND = "numpy"


import numpy as _np


def _as_stack(arr, name):
    out = _np.ascontiguousarray(arr, dtype=_np.complex128)
    if out.ndim != 3 or out.shape[1] != out.shape[2]:
        raise ValueError(f"{name} must be a stack of square matrices, got shape {out.shape}")
    if not out.flags.writeable:
        # the compiled kernels take non-const memoryviews and reject
        # read-only buffers (e.g. frozen dataclass fields)
        out = out.copy()
    return out


def propagate(h, dt):
    h = _as_stack(h, "h")
    if not dt > 0:
        raise ValueError("dt must be positive")
    return _impl.propagate(h, dt)


def averaged_ops(h, dt, ops):
    h = _as_stack(h, "h")
    ops = _as_stack(ops, "ops") if len(ops) else _np.zeros((0, h.shape[1], h.shape[1]), dtype=_np.complex128)
    if not dt > 0:
        raise ValueError("dt must be positive")
    if ops.shape[1] != h.shape[1]:
        raise ValueError("operator dimension does not match the Hamiltonian stack")
    return _impl.averaged_ops(h, dt, ops)


__all__ = [
    "BACKEND",
    "averaged_ops",
    "m0_matrix",
    "numpy_backend",
    "propagate",
    "riemann_averaged_ops",
    "riemann_grid_propagators",
    "riemann_m0_matrix",
]
