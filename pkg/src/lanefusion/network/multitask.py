from __future__ import annotations

import numpy as np
import torch

MODALITIES = ("none", "image", "lidar")


def multitask_combine(lane_prob, road_prob, k):
    """Gate lane probability by road probability: ``lane * (k + (1 - k) * road)``.

    ``k`` is clamped to [0, 1] first; ``k = 1`` ignores the road branch
    entirely, ``k = 0`` only keeps lane evidence that lies on the road.
    Works on tensors (differentiable in all three inputs) and NumPy arrays.
    """
    if isinstance(lane_prob, torch.Tensor):
        k = torch.as_tensor(k, dtype=lane_prob.dtype, device=lane_prob.device).clamp(0.0, 1.0)
    else:
        k = np.clip(k, 0.0, 1.0)
    return lane_prob * (k + (1 - k) * road_prob)


def mask_modality(inputs, which: str = "none"):
    """Replace the lost modality with zeros of the same shape; keep the other as is."""
    if which not in MODALITIES:
        raise ValueError(f"which must be one of {MODALITIES}, got {which!r}")
    image, lidar = inputs
    if which == "image":
        image = torch.zeros_like(image) if isinstance(image, torch.Tensor) else np.zeros_like(image)
    elif which == "lidar" and lidar is not None:
        lidar = torch.zeros_like(lidar) if isinstance(lidar, torch.Tensor) else np.zeros_like(lidar)
    return image, lidar
