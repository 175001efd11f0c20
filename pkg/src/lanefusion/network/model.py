"""U-shaped lane segmentation network with optional LiDAR fusion.

Resolution schedule for an H x W input and base width ``w``::

    image encoder   e1 conv  (w,  H/2)   e2 res (2w, H/4)   e3 res (4w, H/8)   e4 conv (8w, H/16)
    decoder         d1 conv  (8w, H/16)  d2 up (4w, H/8)    d3 up (2w, H/4)    d4 up (w, H/2)   d5 up (w, H)

Decoder block ``d{i}`` (i >= 2) sees ``cat(d{i-1}, e{6-i})``. The LiDAR branch
mirrors the encoder with plain conv blocks. Fusion points: early after e1,
middle at e4, late after d2. With multitask the last three decoder blocks are
duplicated into a road branch.
"""
from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from .blocks import ContractError, ConvBlock, ResidualBlock, UpBlock, make_fuse
from .config import ArchitectureConfig
from .multitask import multitask_combine


@dataclass
class SegmentationOutput:
    lane_logprob: torch.Tensor
    road_logprob: torch.Tensor | None = None
    k_value: torch.Tensor | None = None

    @property
    def lane_prob(self) -> torch.Tensor:
        return self.lane_logprob.exp().select(-3, 1)


class _Decoder(nn.Module):
    """Decoder blocks d3..d5 plus a 2-class head."""

    def __init__(self, w):
        super().__init__()
        self.d3 = UpBlock(8 * w, 2 * w)
        self.d4 = UpBlock(4 * w, w)
        self.d5 = UpBlock(2 * w, w)
        self.head = nn.Conv2d(w, 2, 1)

    def forward(self, d2, skips):
        e1, e2, e3 = skips
        x = self.d3(torch.cat([d2, e3], 1))
        x = self.d4(torch.cat([x, e2], 1))
        x = self.d5(torch.cat([x, e1], 1))
        return F.log_softmax(self.head(x), dim=1)


class _LidarBranch(nn.Module):
    def __init__(self, w, stages):
        super().__init__()
        self.stages = stages
        self.e1 = ConvBlock(3, w, stride=2)
        need_deep = "middle" in stages or "late" in stages
        if need_deep:
            self.e2 = ConvBlock(w, 2 * w, stride=2)
            self.e3 = ConvBlock(2 * w, 4 * w, stride=2)
            self.e4 = ConvBlock(4 * w, 8 * w, stride=2)
        if "late" in stages:
            self.d1 = ConvBlock(8 * w, 8 * w)
            self.d2 = UpBlock(16 * w, 4 * w)

    def encode(self, x):
        feats = {"e1": self.e1(x)}
        if hasattr(self, "e2"):
            feats["e2"] = self.e2(feats["e1"])
            feats["e3"] = self.e3(feats["e2"])
            feats["e4"] = self.e4(feats["e3"])
        if "late" in self.stages:
            d1 = self.d1(feats["e4"])
            feats["d2"] = self.d2(torch.cat([d1, feats["e4"]], 1))
        return feats


class FusionNet(nn.Module):
    def __init__(self, config: ArchitectureConfig):
        super().__init__()
        self.config = config
        w = config.base_width
        stages = config.fuse_stages
        self.e1 = ConvBlock(3, w, stride=2)
        self.e2 = ResidualBlock(w, 2 * w)
        self.e3 = ResidualBlock(2 * w, 4 * w)
        self.e4 = ConvBlock(4 * w, 8 * w, stride=2)
        self.d1 = ConvBlock(8 * w, 8 * w)
        self.d2 = UpBlock(16 * w, 4 * w)
        self.lane = _Decoder(w)

        self.lidar = _LidarBranch(w, stages) if stages else None
        widths = {"early": w, "middle": 8 * w, "late": 4 * w}
        self.fuse = nn.ModuleDict({s: make_fuse(widths[s], config.adaptive_fuse) for s in sorted(stages)})

        if config.multitask:
            self.road = _Decoder(w)
            self.k = nn.Parameter(torch.tensor(0.5))
        else:
            self.road = None
            self.register_parameter("k", None)

    @property
    def has_lidar(self) -> bool:
        return self.lidar is not None

    def _check(self, image, lidar):
        h, w = self.config.input_size
        if image.dim() != 4 or tuple(image.shape[1:]) != (3, h, w):
            raise ContractError(f"expected image of shape (B, 3, {h}, {w}), got {tuple(image.shape)}")
        if self.lidar is None:
            if lidar is not None:
                raise ContractError(f"{self.config.variant} is image-only and takes no LiDAR input")
            return
        if lidar is None:
            raise ContractError(f"{self.config.variant} needs a LiDAR input")
        if tuple(lidar.shape) != tuple(image.shape):
            raise ContractError(f"LiDAR shape {tuple(lidar.shape)} does not match image {tuple(image.shape)}")

    def forward(self, image, lidar=None) -> SegmentationOutput:
        self._check(image, lidar)
        # CPU conv backward crashes on channels-last strides in this torch build
        image = image.contiguous()
        lidar = lidar.contiguous() if lidar is not None else None
        stages = self.config.fuse_stages
        lid = self.lidar.encode(lidar) if self.lidar is not None else {}

        e1 = self.e1(image)
        if "early" in stages:
            e1 = self.fuse["early"](e1, lid["e1"])
        e2 = self.e2(e1)
        e3 = self.e3(e2)
        e4 = self.e4(e3)
        if "middle" in stages:
            e4 = self.fuse["middle"](e4, lid["e4"])
        d1 = self.d1(e4)
        d2 = self.d2(torch.cat([d1, e4], 1))
        if "late" in stages:
            d2 = self.fuse["late"](d2, lid["d2"])

        skips = (e1, e2, e3)
        lane_logprob = self.lane(d2, skips)
        if self.road is None:
            return SegmentationOutput(lane_logprob)

        road_logprob = self.road(d2, skips)
        k = self.k.clamp(0.0, 1.0)
        combined = multitask_combine(lane_logprob[:, 1].exp(), road_logprob[:, 1].exp(), k)
        # back to log space, kept strictly inside (0, 1) so both logs stay finite
        combined = combined.clamp(1e-7, 1.0 - 1e-7)
        lane_logprob = torch.stack([torch.log1p(-combined), torch.log(combined)], dim=1)
        return SegmentationOutput(lane_logprob, road_logprob, k)

    def clamp_k(self):
        if self.k is not None:
            with torch.no_grad():
                self.k.clamp_(0.0, 1.0)


def build_model(config: ArchitectureConfig, seed: int | None = None) -> FusionNet:
    """Construct a variant; ``seed`` makes the initial weights reproducible."""
    if seed is None:
        return FusionNet(config)
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        return FusionNet(config)


def forward(model: FusionNet, image, lidar=None) -> SegmentationOutput:
    """Run ``model`` on one sample (3 x H x W) or a batch (B x 3 x H x W)."""
    single = image.dim() == 3
    if single:
        image = image.unsqueeze(0)
        lidar = lidar.unsqueeze(0) if lidar is not None else None
    out = model(image, lidar)
    if single:
        out = SegmentationOutput(
            out.lane_logprob[0],
            out.road_logprob[0] if out.road_logprob is not None else None,
            out.k_value,
        )
    return out


def count_parameters(module: nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())
