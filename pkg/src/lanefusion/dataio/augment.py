"""Replayable frame augmentation.

Geometric ops (perspective, rotation, flip, random_crop) warp the image, the
projected LiDAR map and both masks with the same transform. Photometric ops
(brightness, contrast, gaussian_noise) touch the image only. ``lane_erase``
blanks a stretch of painted lane in the image but leaves the labels alone, so
the network learns to bridge occlusions.

The raw ``cloud`` is not transformed; after a geometric op only ``lidar`` is
aligned with the image.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import cv2
import numpy as np

from .frames import FrameRecord

GEOMETRIC = ("perspective", "rotation", "flip", "random_crop")
PHOTOMETRIC = ("brightness", "contrast", "gaussian_noise")
OPS = GEOMETRIC + PHOTOMETRIC + ("lane_erase",)

DEFAULT_PARAMS = {
    "perspective": {"max_shift": 0.06},
    "rotation": {"degrees": (-5.0, 5.0)},
    "flip": {},
    "random_crop": {"scale": (0.8, 1.0)},
    "brightness": {"delta": (-0.2, 0.2)},
    "contrast": {"factor": (0.7, 1.3)},
    "gaussian_noise": {"sigma": (0.0, 0.03)},
    "lane_erase": {"rows": (4, 16)},
}


@dataclass(frozen=True)
class AugOp:
    name: str
    params: dict = field(default_factory=dict)
    p: float = 1.0

    def __post_init__(self):
        if self.name not in OPS:
            raise ValueError(f"unknown augmentation op {self.name!r}")
        merged = dict(DEFAULT_PARAMS[self.name])
        merged.update(self.params)
        object.__setattr__(self, "params", merged)


@dataclass(frozen=True)
class AugmentationPlan:
    ops: tuple[AugOp, ...]
    seed: int = 0

    @classmethod
    def default(cls, seed: int, p: float = 0.5) -> "AugmentationPlan":
        return cls(tuple(AugOp(name, p=p) for name in OPS), seed)

    def for_record(self, index: int) -> "AugmentationPlan":
        """Per-record plan: parallel workers get the same result in any order."""
        seed = int(np.random.SeedSequence([self.seed, index]).generate_state(1)[0])
        return AugmentationPlan(self.ops, seed)


def _uniform(rng, bounds):
    lo, hi = bounds
    return float(rng.uniform(lo, hi)) if hi > lo else float(lo)


def _warp(frame: FrameRecord, matrix: np.ndarray) -> dict:
    h, w = frame.shape
    perspective = matrix.shape == (3, 3)
    warp = cv2.warpPerspective if perspective else cv2.warpAffine

    def apply(arr, interp):
        return warp(arr, matrix, (w, h), flags=interp, borderMode=cv2.BORDER_CONSTANT, borderValue=0)

    out = {"image": np.clip(apply(frame.image.astype(np.float64), cv2.INTER_LINEAR), 0.0, 1.0)}
    out["lane_mask"] = apply(frame.lane_mask.astype(np.uint8), cv2.INTER_NEAREST)
    if frame.road_mask is not None:
        out["road_mask"] = apply(frame.road_mask.astype(np.uint8), cv2.INTER_NEAREST)
    if frame.lidar is not None:
        # nearest keeps sparse maps sparse
        moved = apply(np.ascontiguousarray(frame.lidar.transpose(1, 2, 0)), cv2.INTER_NEAREST)
        out["lidar"] = np.ascontiguousarray(moved.transpose(2, 0, 1))
    return out


def _flip(frame: FrameRecord) -> dict:
    out = {"image": frame.image[:, ::-1].copy(), "lane_mask": frame.lane_mask[:, ::-1].copy()}
    if frame.road_mask is not None:
        out["road_mask"] = frame.road_mask[:, ::-1].copy()
    if frame.lidar is not None:
        out["lidar"] = frame.lidar[:, :, ::-1].copy()
    return out


def _geometric(frame: FrameRecord, op: AugOp, rng) -> dict:
    h, w = frame.shape
    if op.name == "flip":
        return _flip(frame)
    if op.name == "rotation":
        angle = _uniform(rng, op.params["degrees"])
        return _warp(frame, cv2.getRotationMatrix2D((w / 2.0, h / 2.0), angle, 1.0))
    if op.name == "perspective":
        s = op.params["max_shift"]
        src = np.float32([[0, 0], [w, 0], [w, h], [0, h]])
        jitter = rng.uniform(-s, s, size=(4, 2)) * np.array([w, h])
        dst = (src + jitter).astype(np.float32)
        return _warp(frame, cv2.getPerspectiveTransform(src, dst))
    # random_crop: cut a window and stretch it back to full size
    scale = _uniform(rng, op.params["scale"])
    cw, ch = w * scale, h * scale
    x0 = float(rng.uniform(0, w - cw)) if cw < w else 0.0
    y0 = float(rng.uniform(0, h - ch)) if ch < h else 0.0
    matrix = np.array([[1 / scale, 0, -x0 / scale], [0, 1 / scale, -y0 / scale]])
    return _warp(frame, matrix)


def _photometric(image: np.ndarray, op: AugOp, rng) -> np.ndarray:
    if op.name == "brightness":
        image = image + _uniform(rng, op.params["delta"])
    elif op.name == "contrast":
        mean = image.mean()
        image = (image - mean) * _uniform(rng, op.params["factor"]) + mean
    else:
        sigma = _uniform(rng, op.params["sigma"])
        image = image + rng.normal(0.0, sigma, size=image.shape)
    return np.clip(image, 0.0, 1.0)


def _lane_erase(frame: FrameRecord, op: AugOp, rng) -> np.ndarray:
    image = frame.image.copy()
    rows, cols = np.nonzero(frame.lane_mask)
    if len(rows) == 0:
        return image
    pick = int(rng.integers(len(rows)))
    lo, hi = op.params["rows"]
    span = int(rng.integers(lo, hi + 1))
    r0 = rows[pick] - span // 2
    band = (rows >= r0) & (rows < r0 + span)
    image[rows[band], cols[band]] = 0.0
    return image


def augment_frame(frame: FrameRecord, plan: AugmentationPlan) -> FrameRecord:
    rng = np.random.default_rng(plan.seed)
    current = frame
    applied = []
    for op in plan.ops:
        if op.p < 1.0 and rng.random() >= op.p:
            continue
        if op.name in GEOMETRIC:
            current = current.replace(**_geometric(current, op, rng))
        elif op.name in PHOTOMETRIC:
            current = current.replace(image=_photometric(current.image, op, rng))
        else:
            current = current.replace(image=_lane_erase(current, op, rng))
        applied.append(op.name)
    meta = dict(frame.meta)
    meta["augmentations"] = applied
    return current.replace(meta=meta)
