"""Kernel backend selection.

The compiled module is used when it imports; ``BENTLAB_PURE_PYTHON=1``
forces the Python fallback.
"""
import os

from . import _kernels_py

python_backend = _kernels_py

if os.environ.get("BENTLAB_PURE_PYTHON"):
    compiled_backend = None
else:
    try:
        from . import _kernels as compiled_backend
    except ImportError:
        compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend
BACKEND = backend.BACKEND
seesaw_restart = backend.seesaw_restart
grid_plane_min = backend.grid_plane_min
