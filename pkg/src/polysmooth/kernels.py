"""Kernel selection: compiled extension when importable, numpy otherwise.

Set ``POLYSMOOTH_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from . import _kernels_py as python

compiled = None
if os.environ.get("POLYSMOOTH_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _kernels as compiled
    except ImportError:  # extension not built
        compiled = None

backend = compiled if compiled is not None else python
BACKEND_NAME = "cython" if compiled is not None else "python"

wachspress_values = backend.wachspress_values
wachspress_derivatives = backend.wachspress_derivatives
