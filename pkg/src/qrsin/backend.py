"""Kernel backend selection: compiled extension if importable, numpy otherwise.

Set QRSIN_PURE_PYTHON=1 to force the numpy kernels (useful for benchmarking
and for debugging suspected extension issues).
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built on this platform
    _compiled = None

HAVE_COMPILED = _compiled is not None

if HAVE_COMPILED and not os.environ.get("QRSIN_PURE_PYTHON"):
    _impl = _compiled
else:
    _impl = _kernels_py

BACKEND = _impl.BACKEND
map_batch = _impl.map_batch
classify_escape = _impl.classify_escape


def available_backends() -> dict:
    """Name -> module for every importable kernel implementation."""
    out = {"numpy": _kernels_py}
    if HAVE_COMPILED:
        out["cython"] = _compiled
    return out
