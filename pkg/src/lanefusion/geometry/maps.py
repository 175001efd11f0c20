"""Calibration, point clouds, and the projected modal maps."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

CHANNELS = ("reflectance", "height", "distance")
DEFAULT_BOUNDS = ((0.0, 1.0), (-3.0, 3.0), (0.0, 80.0))


class CalibrationError(ValueError):
    pass


class NormalizationError(ValueError):
    """Raised when a channel's normalization range is degenerate."""


@dataclass(frozen=True)
class Calibration:
    """Camera intrinsics ``K`` plus the sensor-to-camera transform ``[R|T]``."""

    K: np.ndarray
    R: np.ndarray
    T: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "K", np.asarray(self.K, dtype=np.float64).reshape(3, 3))
        object.__setattr__(self, "R", np.asarray(self.R, dtype=np.float64).reshape(3, 3))
        object.__setattr__(self, "T", np.asarray(self.T, dtype=np.float64).reshape(3))
        self.validate()

    def validate(self, tol: float = 1e-6) -> None:
        K, R = self.K, self.R
        if not (np.all(np.isfinite(K)) and np.all(np.isfinite(R)) and np.all(np.isfinite(self.T))):
            raise CalibrationError("calibration contains non-finite values")
        if K[2, 2] != 1.0:
            raise CalibrationError(f"K[2][2] must be 1, got {K[2, 2]}")
        if K[1, 0] != 0.0 or K[2, 0] != 0.0 or K[2, 1] != 0.0:
            raise CalibrationError("K must be upper-triangular")
        if K[0, 0] <= 0 or K[1, 1] <= 0:
            raise CalibrationError("focal lengths must be positive")
        if abs(np.linalg.det(R) - 1.0) > tol:
            raise CalibrationError(f"det(R) = {np.linalg.det(R):.9f}, expected 1")
        if np.max(np.abs(R.T @ R - np.eye(3))) > tol:
            raise CalibrationError("R is not orthonormal")

    @property
    def projection(self) -> np.ndarray:
        """The 3x4 matrix ``K [R|T]``."""
        return self.K @ np.hstack([self.R, self.T[:, None]])


@dataclass
class PointCloud:
    """``points`` is an (N, 4) array of x, y, z in meters plus reflectance."""

    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 4), np.float32))

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float32).reshape(-1, 4)
        if not np.all(np.isfinite(pts)):
            raise ValueError("point cloud contains non-finite values")
        pts = pts.copy()
        pts[:, 3] = np.clip(pts[:, 3], 0.0, 1.0)
        self.points = pts

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class SparseModalMap:
    """Projected LiDAR channels, shape (3, H, W), with a mask of populated pixels."""

    channels: np.ndarray
    known: np.ndarray

    @property
    def height(self) -> int:
        return self.channels.shape[1]

    @property
    def width(self) -> int:
        return self.channels.shape[2]

    @property
    def coverage(self) -> float:
        return float(self.known.sum()) / self.known.size


@dataclass
class DenseModalMap:
    channels: np.ndarray
    known: np.ndarray
    degenerate: bool = False

    @property
    def height(self) -> int:
        return self.channels.shape[1]

    @property
    def width(self) -> int:
        return self.channels.shape[2]


def project_points(cloud: PointCloud, calib: Calibration, width: int, height: int) -> SparseModalMap:
    """Project a sensor-frame cloud onto the image plane.

    Each surviving point writes (reflectance, sensor z, range) at pixel
    ``(floor(u), floor(v))``. Points behind the camera or outside the frame
    are dropped. When several points land on one pixel the nearest wins,
    ties going to the earlier point.
    """
    if width <= 0 or height <= 0:
        raise ValueError("width and height must be positive")
    channels = np.zeros((3, height, width), dtype=np.float64)
    known = np.zeros((height, width), dtype=bool)
    pts = np.asarray(cloud.points, dtype=np.float64)
    if len(pts) == 0:
        return SparseModalMap(channels, known)

    xyz = pts[:, :3]
    cam = xyz @ calib.R.T + calib.T
    depth = cam[:, 2]
    front = depth > 0
    uvw = cam[front] @ calib.K.T
    u = np.floor(uvw[:, 0] / uvw[:, 2])
    v = np.floor(uvw[:, 1] / uvw[:, 2])
    inside = (u >= 0) & (u < width) & (v >= 0) & (v < height)

    idx = np.flatnonzero(front)[inside]
    if len(idx) == 0:
        return SparseModalMap(channels, known)
    flat = v[inside].astype(np.int64) * width + u[inside].astype(np.int64)
    dist = np.linalg.norm(xyz[idx], axis=1)

    # nearest point per pixel: sort by (pixel, distance, index), keep first of each pixel
    order = np.lexsort((idx, dist, flat))
    flat, idx, dist = flat[order], idx[order], dist[order]
    _, first = np.unique(flat, return_index=True)
    flat, idx, dist = flat[first], idx[first], dist[first]

    rows, cols = np.divmod(flat, width)
    channels[0, rows, cols] = pts[idx, 3]
    channels[1, rows, cols] = pts[idx, 2]
    channels[2, rows, cols] = dist
    known[rows, cols] = True
    return SparseModalMap(channels, known)


def _as_bounds(bounds) -> list[tuple[float, float]]:
    if bounds is None:
        bounds = DEFAULT_BOUNDS
    if isinstance(bounds, dict):
        bounds = [bounds[name] for name in CHANNELS]
    out = [(float(lo), float(hi)) for lo, hi in bounds]
    if len(out) != 3:
        raise NormalizationError("need one (min, max) pair per channel")
    for name, (lo, hi) in zip(CHANNELS, out):
        if not lo < hi:
            raise NormalizationError(f"degenerate normalization range for {name}: ({lo}, {hi})")
    return out


def compose_modal_image(
    dense: DenseModalMap, bounds: Sequence[tuple[float, float]] | dict | None = None
) -> DenseModalMap:
    """Rescale each channel to [0, 1] with fixed per-channel bounds and clamp."""
    out = np.empty_like(dense.channels, dtype=np.float64)
    for c, (lo, hi) in enumerate(_as_bounds(bounds)):
        out[c] = np.clip((dense.channels[c] - lo) / (hi - lo), 0.0, 1.0)
    return DenseModalMap(out, dense.known.copy(), dense.degenerate)


def compose_sparse_image(
    sparse: SparseModalMap, bounds: Sequence[tuple[float, float]] | dict | None = None
) -> np.ndarray:
    """Normalized channels of an uncompleted map; blank pixels stay 0."""
    composed = compose_modal_image(DenseModalMap(sparse.channels, sparse.known), bounds).channels
    return composed * sparse.known[None]
