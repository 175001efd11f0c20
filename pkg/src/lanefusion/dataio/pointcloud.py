"""KITTI velodyne ``.bin`` files: little-endian float32 (x, y, z, reflectance) records."""
from __future__ import annotations

import numpy as np

from ..geometry.maps import PointCloud

RECORD_BYTES = 16
_DTYPE = np.dtype("<f4")


class TruncatedPointCloudError(ValueError):
    pass


def load_point_cloud(blob: bytes) -> PointCloud:
    if len(blob) % RECORD_BYTES:
        raise TruncatedPointCloudError(
            f"point cloud blob of {len(blob)} bytes is not a multiple of {RECORD_BYTES}"
        )
    return PointCloud(np.frombuffer(blob, dtype=_DTYPE).reshape(-1, 4))


def dump_point_cloud(cloud: PointCloud) -> bytes:
    return np.ascontiguousarray(cloud.points, dtype=_DTYPE).tobytes()


def read_point_cloud(path) -> PointCloud:
    with open(path, "rb") as fh:
        return load_point_cloud(fh.read())


def write_point_cloud(path, cloud: PointCloud) -> None:
    with open(path, "wb") as fh:
        fh.write(dump_point_cloud(cloud))
