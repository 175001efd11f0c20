from .data import Batch, LaneDataset, dataset_for, modal_map, resize_frame, with_lidar
from .loop import HISTORY_COLUMNS, TrainingDiverged, TrainReport, fit
from .loss import weighted_nll_loss
from .schedule import ClassWeights, class_weights, learning_rate

__all__ = [
    "Batch",
    "ClassWeights",
    "HISTORY_COLUMNS",
    "LaneDataset",
    "TrainReport",
    "TrainingDiverged",
    "class_weights",
    "dataset_for",
    "fit",
    "learning_rate",
    "modal_map",
    "resize_frame",
    "weighted_nll_loss",
    "with_lidar",
]
