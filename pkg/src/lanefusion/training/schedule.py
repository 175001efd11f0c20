from __future__ import annotations

from dataclasses import dataclass

LR0 = 1e-4
WARMUP_EPOCHS = 20  # balanced class weights before this epoch
EPS = 1e-4


def learning_rate(epoch: int, lr0: float = LR0) -> float:
    """Cyclical decay: 0.8x every 10 epochs, doubled back up every 50."""
    if epoch < 0:
        raise ValueError("epoch must be non-negative")
    if lr0 <= 0:
        raise ValueError("lr0 must be positive")
    return 2.0 ** (epoch // 50) * 0.8 ** (epoch // 10) * lr0


@dataclass(frozen=True)
class ClassWeights:
    w_lane: float
    w_background: float

    def __post_init__(self):
        if self.w_lane < 0 or self.w_background < 0:
            raise ValueError("class weights must be non-negative")
        total = self.w_lane + self.w_background
        if total <= 0:
            raise ValueError("class weights must not both be zero")
        object.__setattr__(self, "w_lane", self.w_lane / total)
        object.__setattr__(self, "w_background", self.w_background / total)

    def as_tuple(self) -> tuple[float, float]:
        """(background, lane), matching the class index order of the outputs."""
        return self.w_background, self.w_lane


def class_weights(prev_lane_fraction: float, epoch: int, eps: float = EPS) -> ClassWeights:
    """Inverse-frequency weights from the previous epoch's predicted lane fraction.

    Balanced (0.5, 0.5) during the first ``WARMUP_EPOCHS`` epochs.
    """
    if not 0.0 <= prev_lane_fraction <= 1.0:
        raise ValueError(f"lane fraction must lie in [0, 1], got {prev_lane_fraction}")
    if epoch < WARMUP_EPOCHS:
        return ClassWeights(0.5, 0.5)
    inv_lane = 1.0 / max(prev_lane_fraction, eps)
    inv_bg = 1.0 / max(1.0 - prev_lane_fraction, eps)
    return ClassWeights(inv_lane, inv_bg)
