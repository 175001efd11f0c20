from .completion import BACKEND, available_backends, knn_complete
from .maps import (
    CHANNELS,
    DEFAULT_BOUNDS,
    Calibration,
    CalibrationError,
    DenseModalMap,
    NormalizationError,
    PointCloud,
    SparseModalMap,
    compose_modal_image,
    compose_sparse_image,
    project_points,
)

__all__ = [
    "BACKEND",
    "CHANNELS",
    "DEFAULT_BOUNDS",
    "Calibration",
    "CalibrationError",
    "DenseModalMap",
    "NormalizationError",
    "PointCloud",
    "SparseModalMap",
    "available_backends",
    "compose_modal_image",
    "compose_sparse_image",
    "knn_complete",
    "project_points",
]
