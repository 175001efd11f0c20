"""Frame records, PNG image/mask files, and the JSON-lines dataset manifest."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from PIL import Image

from ..geometry.maps import Calibration, PointCloud
from .calibration import read_calibration, write_calibration
from .pointcloud import read_point_cloud, write_point_cloud

MANIFEST_NAME = "manifest.jsonl"


@dataclass
class FrameRecord:
    """One aligned sample.

    ``image`` is H x W x 3 in [0, 1]; masks are H x W uint8 in {0, 1}.
    ``lidar`` optionally carries the projected 3 x H x W modal map so that
    geometric augmentation can move it together with the image.
    """

    image: np.ndarray
    cloud: PointCloud
    calib: Calibration
    lane_mask: np.ndarray
    road_mask: np.ndarray | None = None
    lidar: np.ndarray | None = None
    frame_id: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    @property
    def shape(self) -> tuple[int, int]:
        return self.image.shape[:2]

    def validate(self) -> None:
        if self.image.ndim != 3 or self.image.shape[2] != 3:
            raise ValueError(f"image must be H x W x 3, got {self.image.shape}")
        if self.image.min(initial=0.0) < 0 or self.image.max(initial=0.0) > 1:
            raise ValueError("image values must lie in [0, 1]")
        masks = [("lane_mask", self.lane_mask), ("road_mask", self.road_mask)]
        for name, mask in masks:
            if mask is None:
                continue
            if mask.shape != self.shape:
                raise ValueError(f"{name} shape {mask.shape} != image shape {self.shape}")
            if not np.isin(mask, (0, 1)).all():
                raise ValueError(f"{name} must be binary")
        if self.lidar is not None and self.lidar.shape[1:] != self.shape:
            raise ValueError(f"lidar map shape {self.lidar.shape} does not match image {self.shape}")

    def replace(self, **changes) -> "FrameRecord":
        return replace(self, **changes)


def read_image(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0


def write_image(path, image: np.ndarray) -> None:
    data = np.clip(np.rint(np.asarray(image) * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(data, mode="RGB").save(path, optimize=False)


def read_mask(path) -> np.ndarray:
    with Image.open(path) as im:
        return (np.asarray(im.convert("L")) >= 128).astype(np.uint8)


def write_mask(path, mask: np.ndarray) -> None:
    Image.fromarray((np.asarray(mask) > 0).astype(np.uint8) * 255, mode="L").save(path, optimize=False)


def quantize_image(image: np.ndarray) -> np.ndarray:
    """Round to the 8-bit grid so a PNG round trip is lossless."""
    return np.clip(np.rint(image * 255.0), 0, 255) / 255.0


def write_frame(root, frame: FrameRecord, frame_id: str | None = None) -> dict:
    """Write a frame under ``root`` and return its manifest record (relative paths)."""
    root = Path(root)
    fid = frame_id or frame.frame_id
    if not fid:
        raise ValueError("frame needs an id")
    record = {
        "id": fid,
        "image": f"image/{fid}.png",
        "cloud": f"velodyne/{fid}.bin",
        "calib": f"calib/{fid}.txt",
        "lane": f"lane/{fid}.png",
    }
    if frame.road_mask is not None:
        record["road"] = f"road/{fid}.png"
    for rel in record.values():
        if "/" in rel:
            (root / rel).parent.mkdir(parents=True, exist_ok=True)
    write_image(root / record["image"], frame.image)
    write_point_cloud(root / record["cloud"], frame.cloud)
    write_calibration(root / record["calib"], frame.calib)
    write_mask(root / record["lane"], frame.lane_mask)
    if frame.road_mask is not None:
        write_mask(root / record["road"], frame.road_mask)
    return record


def read_frame(root, record: dict) -> FrameRecord:
    root = Path(root)
    for key in ("image", "cloud", "calib", "lane"):
        if key not in record:
            raise ValueError(f"manifest record {record.get('id', '?')} lacks {key!r}")
        path = root / record[key]
        if not path.exists():
            raise FileNotFoundError(str(path))
    road = None
    if record.get("road"):
        road = read_mask(root / record["road"])
    return FrameRecord(
        image=read_image(root / record["image"]),
        cloud=read_point_cloud(root / record["cloud"]),
        calib=read_calibration(root / record["calib"]),
        lane_mask=read_mask(root / record["lane"]),
        road_mask=road,
        frame_id=record["id"],
    )


def write_manifest(path, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_manifest(path) -> list[dict]:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    if not path.exists():
        raise FileNotFoundError(str(path))
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def load_dataset(path) -> list[FrameRecord]:
    """Load every frame listed in a manifest (file or its directory)."""
    path = Path(path)
    manifest = path / MANIFEST_NAME if path.is_dir() else path
    records = read_manifest(manifest)
    root = manifest.parent
    return [read_frame(root, rec) for rec in records]


def relpath(path, start) -> str:
    return os.path.relpath(path, start).replace(os.sep, "/")
