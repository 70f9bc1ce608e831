"""Backend selection for the stencil and CG kernels.

The compiled extension is used when it imports; setting the environment
variable ``HPDE_PURE_PYTHON=1`` forces the numpy implementation.
"""
from __future__ import annotations

import os

from . import _fallback

if os.environ.get("HPDE_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback
        BACKEND = "python"

helmholtz_apply = _impl.helmholtz_apply
helmholtz_cg = _impl.helmholtz_cg
colloc_apply = _impl.colloc_apply
colloc_cg = _impl.colloc_cg

__all__ = ["BACKEND", "helmholtz_apply", "helmholtz_cg", "colloc_apply", "colloc_cg"]
