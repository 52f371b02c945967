"""Backend selection for the hot kernels.

The compiled extension is used when importable; setting
``PPARABOLIC_PURE_PYTHON=1`` forces the pure-Python/numpy fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

ACCEPT = _kernels_py.ACCEPT
REJECT = _kernels_py.REJECT
INCONCLUSIVE = _kernels_py.INCONCLUSIVE
MODE_LIPSCHITZ = _kernels_py.MODE_LIPSCHITZ
MODE_INTERVAL = _kernels_py.MODE_INTERVAL

_backend = _kernels_py
BACKEND = "python"
if os.environ.get("PPARABOLIC_PURE_PYTHON", "") != "1":
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _backend = _compiled
        BACKEND = "compiled"


def backend_module(name: str | None = None):
    """Return the kernel module named ``"python"`` / ``"compiled"`` (default: active)."""
    if name is None:
        return _backend
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")


def sweep(coef_lo, coef_hi, target, max_depth=40, mode=MODE_INTERVAL):
    return _backend.sweep(coef_lo, coef_hi, target, max_depth, mode)


def poly_lower(lo, hi, a, b, mode=MODE_INTERVAL):
    return _backend.poly_lower(lo, hi, a, b, mode)


def poly_enclosure(lo, hi, a, b):
    return _backend.poly_enclosure(lo, hi, a, b)


def poly_point(lo, hi, x):
    return _backend.poly_point(lo, hi, x)


def monotone_rhs(u, hx, hy, p, gamma, eps):
    return _backend.monotone_rhs(u, hx, hy, p, gamma, eps)
