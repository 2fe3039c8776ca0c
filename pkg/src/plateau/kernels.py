"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the NumPy
implementation is used. Setting ``PLATEAU_PURE_PYTHON=1`` forces the
fallback.
"""
import os

if os.environ.get("PLATEAU_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        from . import _kernels_py as _impl

BACKEND = _impl.BACKEND
splat = _impl.splat
stencil_apply = _impl.stencil_apply
triangle_distance = _impl.triangle_distance
trilinear = _impl.trilinear
trilinear_grad = _impl.trilinear_grad

__all__ = ["BACKEND", "splat", "stencil_apply", "triangle_distance", "trilinear", "trilinear_grad"]
