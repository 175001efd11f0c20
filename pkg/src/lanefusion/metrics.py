"""Pixel confusion counts, lane metrics, and dataset evaluation with lost modalities.

Confusion matrices pool over the whole dataset (counts add), the lane class is
positive, and metrics are fractions; reports render them x100.
"""
from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field

import numpy as np
import torch

from .network.blocks import ContractError
from .network.multitask import mask_modality

MODES = ("both", "only_image", "only_points")
_LOST = {"both": "none", "only_image": "lidar", "only_points": "image"}
METRIC_NAMES = ("precision", "LAcc", "Acc", "mAcc", "F2")


@dataclass(frozen=True)
class ConfusionMatrix:
    TP: int = 0
    TN: int = 0
    FP: int = 0
    FN: int = 0

    def __post_init__(self):
        for name in ("TP", "TN", "FP", "FN"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def total(self) -> int:
        return self.TP + self.TN + self.FP + self.FN

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.TP + other.TP, self.TN + other.TN, self.FP + other.FP, self.FN + other.FN)

    def as_dict(self) -> dict:
        return {"TP": self.TP, "TN": self.TN, "FP": self.FP, "FN": self.FN}


def accumulate_confusion(pred, gt) -> ConfusionMatrix:
    pred = _as_bool(pred)
    gt = _as_bool(gt)
    if pred.shape != gt.shape:
        raise ContractError(f"prediction shape {pred.shape} != ground truth shape {gt.shape}")
    tp = int(np.count_nonzero(pred & gt))
    fp = int(np.count_nonzero(pred & ~gt))
    fn = int(np.count_nonzero(~pred & gt))
    return ConfusionMatrix(tp, pred.size - tp - fp - fn, fp, fn)


def _as_bool(mask) -> np.ndarray:
    if isinstance(mask, torch.Tensor):
        mask = mask.detach().cpu().numpy()
    mask = np.asarray(mask)
    if mask.dtype != bool:
        if not np.isin(mask, (0, 1)).all():
            raise ContractError("masks must be binary")
        mask = mask.astype(bool)
    return mask


@dataclass
class MetricsReport:
    precision: float
    LAcc: float
    Acc: float
    mAcc: float
    F2: float
    confusion: ConfusionMatrix
    undefined: tuple[str, ...] = ()
    model: str = ""
    mode: str = "both"
    frames: int = 0
    seconds: float = field(default=0.0, compare=False)

    @property
    def fps(self) -> float:
        return self.frames / self.seconds if self.seconds > 0 else 0.0

    def as_dict(self) -> dict:
        # timing is machine-dependent and stays out of the JSON report
        return {
            "model": self.model,
            "mode": self.mode,
            "frames": self.frames,
            **{name: getattr(self, name) for name in METRIC_NAMES},
            "confusion": self.confusion.as_dict(),
            "undefined": list(self.undefined),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"

    def csv_row(self) -> dict:
        """LAcc/Acc/mAcc/F2 in percent plus local frames/sec (not comparable across hardware)."""
        row = {"model": self.model, "mode": self.mode}
        for name in ("LAcc", "Acc", "mAcc", "F2"):
            row[name] = f"{100 * getattr(self, name):.2f}"
        row["fps_local"] = f"{self.fps:.1f}"
        return row


def _ratio(num, den, name, undefined):
    if den == 0:
        undefined.append(name)
        return 0.0
    return num / den


def compute_metrics(cm: ConfusionMatrix, model: str = "", mode: str = "both") -> MetricsReport:
    if cm.total == 0:
        raise ContractError("confusion matrix is empty")
    undefined: list[str] = []
    precision = _ratio(cm.TP, cm.TP + cm.FP, "precision", undefined)
    recall = _ratio(cm.TP, cm.TP + cm.FN, "LAcc", undefined)
    specificity = _ratio(cm.TN, cm.TN + cm.FP, "background_recall", undefined)
    acc = (cm.TP + cm.TN) / cm.total
    macc = (recall + specificity) / 2
    f2 = _ratio(5 * precision * recall, 4 * precision + recall, "F2", undefined)
    return MetricsReport(precision, recall, acc, macc, f2, cm, tuple(undefined), model, mode)


def _lane_prob(out) -> torch.Tensor:
    return out.lane_logprob[:, 1].exp()


@torch.no_grad()
def predict_confusion(model, dataset, mode="both", threshold=0.5, batch_size=8):
    """Pooled confusion matrix and number of frames over ``dataset``."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    has_lidar = getattr(model, "has_lidar", True)
    if not has_lidar and mode == "only_points":
        raise ContractError("an image-only model cannot be evaluated with only points")
    if isinstance(model, torch.nn.Module):
        model.eval()
    cm = ConfusionMatrix()
    frames = 0
    for batch in dataset.batches(batch_size):
        lidar = batch.lidar if has_lidar else None
        image, lidar = mask_modality((batch.image, lidar), _LOST[mode])
        pred = _lane_prob(model(image, lidar)) > threshold
        cm = cm + accumulate_confusion(pred, batch.lane == 1)
        frames += len(batch)
    return cm, frames


def evaluate(model, dataset, mode: str = "both", threshold: float = 0.5, batch_size: int = 8) -> MetricsReport:
    """Threshold lane probability, pool confusion over all frames, derive metrics."""
    start = time.perf_counter()
    cm, frames = predict_confusion(model, dataset, mode, threshold, batch_size)
    seconds = time.perf_counter() - start
    name = getattr(getattr(model, "config", None), "variant", "")
    report = compute_metrics(cm, name, mode)
    report.frames = frames
    report.seconds = seconds
    return report


def evaluate_modes(model, dataset, modes=MODES, **kw) -> dict[str, MetricsReport]:
    return {mode: evaluate(model, dataset, mode, **kw) for mode in modes}


MODALITY_COLUMNS = (
    "model",
    "both_LAcc", "both_mAcc",
    "only_image_LAcc", "only_image_mAcc",
    "only_points_LAcc", "only_points_mAcc",
    "random_LAcc", "random_mAcc",
)


def modality_table_row(reports: dict[str, MetricsReport]) -> dict:
    """One row shaped like the modality-lost table (percent); 'random' averages the two lost modes."""
    row = {"model": next(iter(reports.values())).model}
    for mode in MODES:
        for metric in ("LAcc", "mAcc"):
            row[f"{mode}_{metric}"] = f"{100 * getattr(reports[mode], metric):.2f}"
    for metric in ("LAcc", "mAcc"):
        avg = (getattr(reports["only_image"], metric) + getattr(reports["only_points"], metric)) / 2
        row[f"random_{metric}"] = f"{100 * avg:.2f}"
    return row


def rows_to_csv(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()
