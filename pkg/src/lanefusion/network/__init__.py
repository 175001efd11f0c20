from .blocks import AdaptiveFuse, ConcatFuse, ContractError, adaptive_fuse, concat_fuse
from .checkpoint import load_checkpoint, save_checkpoint
from .config import VARIANTS, ArchitectureConfig, ConfigError
from .model import FusionNet, SegmentationOutput, build_model, count_parameters, forward
from .multitask import mask_modality, multitask_combine

__all__ = [
    "VARIANTS",
    "AdaptiveFuse",
    "ArchitectureConfig",
    "ConcatFuse",
    "ConfigError",
    "ContractError",
    "FusionNet",
    "SegmentationOutput",
    "adaptive_fuse",
    "build_model",
    "concat_fuse",
    "count_parameters",
    "forward",
    "load_checkpoint",
    "mask_modality",
    "multitask_combine",
    "save_checkpoint",
]
