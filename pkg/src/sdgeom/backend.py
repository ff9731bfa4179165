"""Select the arithmetic kernel: compiled extension if built, else pure Python.

Set SDGEOM_PURE_PYTHON=1 to force the fallback (used by the benchmark and
the backend-equivalence tests).
"""

import os

if os.environ.get("SDGEOM_PURE_PYTHON"):
    from . import _core_py as core
else:
    try:
        from . import _core as core  # type: ignore[attr-defined]
    except ImportError:
        from . import _core_py as core

BACKEND = core.BACKEND
mono_mul = core.mono_mul
elem_mul = core.elem_mul
elem_add = core.elem_add
elem_scale = core.elem_scale
