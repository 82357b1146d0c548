"""Hot inner loops, compiled when available.

The compiled extension is used when it imports; otherwise the pure-Python
twin is used. Set ``FINGERFUSE_PURE_PYTHON=1`` to force the fallback.
``BACKEND`` names the active implementation.
"""
import os

from . import _pykernels as python_backend

compiled_backend = None
if not os.environ.get("FINGERFUSE_PURE_PYTHON"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:
        compiled_backend = None

_active = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

dcm_step = _active.dcm_step
dcm_run = _active.dcm_run
diffuse_quantize = _active.diffuse_quantize
MIN_HORIZONTAL_FIELD = python_backend.MIN_HORIZONTAL_FIELD

__all__ = ["BACKEND", "dcm_step", "dcm_run", "diffuse_quantize", "compiled_backend",
           "python_backend", "MIN_HORIZONTAL_FIELD"]
