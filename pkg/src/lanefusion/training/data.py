"""Turn frame records into network-ready tensors."""
from __future__ import annotations

from dataclasses import dataclass

import cv2
import numpy as np
import torch

from ..dataio.augment import AugmentationPlan, augment_frame
from ..dataio.frames import FrameRecord
from ..geometry import (
    Calibration,
    compose_modal_image,
    compose_sparse_image,
    knn_complete,
    project_points,
)


def resize_frame(frame: FrameRecord, size: tuple[int, int]) -> FrameRecord:
    """Resample a frame to ``size`` = (H, W), rescaling the intrinsics to match."""
    h0, w0 = frame.shape
    h, w = size
    if (h0, w0) == (h, w):
        return frame
    sx, sy = w / w0, h / h0
    K = frame.calib.K.copy()
    K[0] *= sx
    K[1] *= sy
    image = cv2.resize(frame.image, (w, h), interpolation=cv2.INTER_AREA)
    lane = cv2.resize(frame.lane_mask.astype(np.uint8), (w, h), interpolation=cv2.INTER_NEAREST)
    road = None
    if frame.road_mask is not None:
        road = cv2.resize(frame.road_mask.astype(np.uint8), (w, h), interpolation=cv2.INTER_NEAREST)
    return frame.replace(
        image=np.clip(image, 0.0, 1.0),
        lane_mask=lane,
        road_mask=road,
        lidar=None,
        calib=Calibration(K, frame.calib.R, frame.calib.T),
    )


def modal_map(frame: FrameRecord, dense: bool = True, k: int = 3, bounds=None) -> np.ndarray:
    """Normalized 3 x H x W LiDAR image for a frame (completed when ``dense``)."""
    h, w = frame.shape
    sparse = project_points(frame.cloud, frame.calib, w, h)
    if dense:
        return compose_modal_image(knn_complete(sparse, k), bounds).channels
    return compose_sparse_image(sparse, bounds)


def with_lidar(frame: FrameRecord, dense: bool = True, k: int = 3, bounds=None) -> FrameRecord:
    return frame.replace(lidar=modal_map(frame, dense, k, bounds))


@dataclass
class Batch:
    image: torch.Tensor
    lidar: torch.Tensor | None
    lane: torch.Tensor
    road: torch.Tensor | None

    def __len__(self) -> int:
        return self.image.shape[0]


def _stack(frames: list[FrameRecord], use_lidar: bool) -> Batch:
    image = torch.from_numpy(np.ascontiguousarray(np.stack([f.image for f in frames]).transpose(0, 3, 1, 2), dtype=np.float32))
    lidar = None
    if use_lidar:
        lidar = torch.from_numpy(np.stack([f.lidar for f in frames]).astype(np.float32))
    lane = torch.from_numpy(np.stack([f.lane_mask for f in frames]).astype(np.int64))
    road = None
    if all(f.road_mask is not None for f in frames):
        road = torch.from_numpy(np.stack([f.road_mask for f in frames]).astype(np.int64))
    return Batch(image, lidar, lane, road)


class LaneDataset:
    """Frames resized to the model input, each carrying its LiDAR pseudo-image."""

    def __init__(self, frames, input_size=(128, 256), dense_lidar=True, use_lidar=True, k=3, bounds=None):
        if not frames:
            raise ValueError("dataset is empty")
        self.use_lidar = use_lidar
        self.frames = []
        for f in frames:
            f = resize_frame(f, input_size)
            if use_lidar and f.lidar is None:
                f = with_lidar(f, dense_lidar, k, bounds)
            self.frames.append(f)
        self._all = _stack(self.frames, use_lidar)

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def has_road(self) -> bool:
        return self._all.road is not None

    def batch(self, indices, augment: AugmentationPlan | None = None, salt: int = 0) -> Batch:
        indices = list(indices)
        if augment is None:
            idx = torch.as_tensor(indices, dtype=torch.long)
            a = self._all
            return Batch(
                a.image[idx],
                a.lidar[idx] if a.lidar is not None else None,
                a.lane[idx],
                a.road[idx] if a.road is not None else None,
            )
        frames = [augment_frame(self.frames[i], augment.for_record(salt * len(self) + i)) for i in indices]
        return _stack(frames, self.use_lidar)

    def batches(self, batch_size: int, order=None):
        order = range(len(self)) if order is None else order
        order = list(order)
        for start in range(0, len(order), batch_size):
            yield self.batch(order[start:start + batch_size])


def dataset_for(model, frames, k=3, bounds=None) -> LaneDataset:
    cfg = model.config
    return LaneDataset(frames, cfg.input_size, cfg.dense_lidar, cfg.has_lidar, k, bounds)
