from .augment import AugmentationPlan, AugOp, augment_frame
from .calibration import (
    CalibrationParseError,
    format_calibration,
    kitti_to_calibration,
    parse_calibration,
    read_calibration,
    write_calibration,
)
from .frames import (
    MANIFEST_NAME,
    FrameRecord,
    load_dataset,
    read_frame,
    read_manifest,
    write_frame,
    write_manifest,
)
from .pointcloud import TruncatedPointCloudError, dump_point_cloud, load_point_cloud
from .splits import DatasetSplit, split_dataset
from .synthetic import SceneConfig, generate_synthetic_dataset, generate_synthetic_frame

__all__ = [
    "AugOp",
    "AugmentationPlan",
    "CalibrationParseError",
    "DatasetSplit",
    "FrameRecord",
    "MANIFEST_NAME",
    "SceneConfig",
    "TruncatedPointCloudError",
    "augment_frame",
    "dump_point_cloud",
    "format_calibration",
    "generate_synthetic_dataset",
    "generate_synthetic_frame",
    "kitti_to_calibration",
    "load_dataset",
    "load_point_cloud",
    "parse_calibration",
    "read_calibration",
    "read_frame",
    "read_manifest",
    "split_dataset",
    "write_calibration",
    "write_frame",
    "write_manifest",
]
