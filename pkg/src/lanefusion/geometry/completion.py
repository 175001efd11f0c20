"""k-NN densification of sparse modal maps.

The compiled kernel is used when it was built; set ``LANEFUSION_PURE_PYTHON=1``
to force the NumPy fallback.
"""
from __future__ import annotations

import logging
import os

import numpy as np

from . import _knn_fallback
from .maps import DenseModalMap, SparseModalMap

log = logging.getLogger(__name__)

if os.environ.get("LANEFUSION_PURE_PYTHON"):
    _compiled = None
else:
    try:
        from . import _knn as _compiled
    except ImportError:  # extension not built
        _compiled = None
        log.debug("compiled k-NN kernel unavailable, using NumPy fallback")

BACKEND = "cython" if _compiled is not None else "numpy"
_KERNELS = {"numpy": _knn_fallback.knn_fill}
if _compiled is not None:
    _KERNELS["cython"] = _compiled.knn_fill


def available_backends() -> list[str]:
    return sorted(_KERNELS)


def knn_complete(sparse: SparseModalMap, k: int = 3, backend: str | None = None) -> DenseModalMap:
    """Fill blank pixels by inverse-distance weighting of the k nearest known pixels.

    Known pixels are copied untouched. With fewer than ``k`` known pixels all
    of them are used; with none the map is zero-filled and flagged degenerate.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    kernel = _KERNELS[backend or BACKEND]
    channels = np.ascontiguousarray(sparse.channels, dtype=np.float64)
    known = np.ascontiguousarray(sparse.known, dtype=np.uint8)
    filled, degenerate = kernel(channels, known, int(k))
    return DenseModalMap(np.asarray(filled), sparse.known.astype(bool).copy(), bool(degenerate))
