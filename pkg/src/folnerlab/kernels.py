"""Kernel selection: compiled Cython module if importable, numpy otherwise.

Set ``FOLNERLAB_PURE=1`` to force the numpy fallback.
"""
from __future__ import annotations

import os

from . import _fallback

BACKEND = "numpy"
_impl = _fallback
if os.environ.get("FOLNERLAB_PURE") != "1":
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _fallback

prefix_lognorms = _impl.prefix_lognorms
product_lognorms = _impl.product_lognorms
window_lognorms = _impl.window_lognorms

__all__ = ["BACKEND", "prefix_lognorms", "product_lognorms", "window_lognorms"]
