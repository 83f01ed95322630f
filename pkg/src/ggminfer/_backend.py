"""Kernel selection: compiled extension when importable, else pure Python.

Set ``GGMINFER_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _fallback

if os.environ.get("GGMINFER_PURE_PYTHON", "") not in ("", "0"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback
        BACKEND = "python"

lasso_cd = _impl.lasso_cd
jacobi_eigen = _impl.jacobi_eigen
