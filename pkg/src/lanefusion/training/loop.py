from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import torch

from ..dataio.augment import AugmentationPlan
from ..network.checkpoint import save_checkpoint
from ..network.model import FusionNet
from .data import LaneDataset
from .loss import weighted_nll_loss
from .schedule import LR0, class_weights, learning_rate

log = logging.getLogger(__name__)

HISTORY_COLUMNS = ("epoch", "lr", "loss", "lane_acc", "k")


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainReport:
    epoch: list[int] = field(default_factory=list)
    lr: list[float] = field(default_factory=list)
    loss: list[float] = field(default_factory=list)
    lane_acc: list[float] = field(default_factory=list)
    k: list[float | None] = field(default_factory=list)
    lane_fraction: list[float] = field(default_factory=list)
    val_metrics: object = None  # MetricsReport on the validation set, when given

    def __len__(self) -> int:
        return len(self.epoch)

    def rows(self):
        for i in range(len(self)):
            k = self.k[i]
            yield {
                "epoch": self.epoch[i],
                "lr": repr(self.lr[i]),
                "loss": repr(self.loss[i]),
                "lane_acc": repr(self.lane_acc[i]),
                "k": "" if k is None else repr(k),
            }

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=HISTORY_COLUMNS, lineterminator="\n")
            writer.writeheader()
            writer.writerows(self.rows())


def _set_lr(optimizer, lr):
    for group in optimizer.param_groups:
        group["lr"] = lr


def fit(
    model: FusionNet,
    train: LaneDataset,
    val: LaneDataset | None = None,
    epochs: int = 200,
    seed: int = 0,
    batch_size: int = 4,
    lr0: float = LR0,
    augment: AugmentationPlan | None = None,
    checkpoint_dir=None,
    checkpoint_every: int = 0,
) -> tuple[FusionNet, TrainReport]:
    """Train with Adam, the cyclical schedule, and adaptive class weights.

    Class weights for epoch e come from the fraction of pixels predicted as
    lane (road) during epoch e - 1 over the whole training set. Multitask
    models add the road loss with unit weight.
    """
    if len(train) == 0:
        raise ValueError("training set is empty")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    multitask = model.road is not None
    if multitask and not train.has_road:
        raise ValueError(f"{model.config.variant} trains a road branch but the data has no road masks")

    torch.manual_seed(seed)
    order_gen = torch.Generator().manual_seed(seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=lr0, betas=(0.9, 0.999), eps=1e-8)
    report = TrainReport()
    prev_lane, prev_road = 0.5, 0.5

    for epoch in range(epochs):
        lr = learning_rate(epoch, lr0)
        _set_lr(optimizer, lr)
        w_lane = class_weights(prev_lane, epoch)
        w_road = class_weights(prev_road, epoch)

        model.train()
        order = torch.randperm(len(train), generator=order_gen).tolist()
        total_loss = 0.0
        pixels = pred_lane = pred_road = tp = gt_lane = 0
        for start in range(0, len(order), batch_size):
            idx = order[start:start + batch_size]
            batch = train.batch(idx, augment, salt=epoch)
            out = model(batch.image, batch.lidar)
            finite = bool(torch.isfinite(out.lane_logprob).all())
            if finite:
                loss = weighted_nll_loss(out.lane_logprob, batch.lane, w_lane)
                if multitask:
                    loss = loss + weighted_nll_loss(out.road_logprob, batch.road, w_road)
            else:
                loss = torch.tensor(float("nan"))
            if not torch.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss {float(loss)} at epoch {epoch}, batch starting {start}, lr {lr:.3g}"
                )
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            model.clamp_k()

            with torch.no_grad():
                pred = out.lane_logprob[:, 1] > math.log(0.5)
                total_loss += float(loss) * len(idx)
                pixels += pred.numel()
                pred_lane += int(pred.sum())
                tp += int((pred & (batch.lane == 1)).sum())
                gt_lane += int((batch.lane == 1).sum())
                if multitask:
                    pred_road += int((out.road_logprob[:, 1] > math.log(0.5)).sum())

        prev_lane = pred_lane / pixels
        if multitask:
            prev_road = pred_road / pixels
        report.epoch.append(epoch)
        report.lr.append(lr)
        report.loss.append(total_loss / len(order))
        report.lane_acc.append(tp / gt_lane if gt_lane else 0.0)
        report.k.append(float(model.k.detach()) if model.k is not None else None)
        report.lane_fraction.append(prev_lane)
        log.info(
            "epoch %d lr %.3g loss %.4f lane_acc %.4f pred_lane %.4f",
            epoch, lr, report.loss[-1], report.lane_acc[-1], prev_lane,
        )
        if checkpoint_dir and checkpoint_every and (epoch + 1) % checkpoint_every == 0:
            path = Path(checkpoint_dir) / f"epoch{epoch + 1:04d}.ckpt"
            save_checkpoint(path, model, epoch=epoch + 1, seed=seed)

    model.eval()
    if val is not None and len(val):
        from ..metrics import evaluate

        report.val_metrics = evaluate(model, val)
    return model, report
