"""Single-file checkpoints with the architecture config embedded."""
from __future__ import annotations

from pathlib import Path

import torch

from .config import ArchitectureConfig
from .model import FusionNet, build_model


def save_checkpoint(path, model: FusionNet, **extra) -> None:
    payload = {"config": model.config.to_dict(), "state_dict": model.state_dict(), "extra": extra}
    torch.save(payload, path)


def load_checkpoint(path) -> tuple[FusionNet, dict]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    payload = torch.load(path, map_location="cpu", weights_only=False)
    model = build_model(ArchitectureConfig.from_dict(payload["config"]))
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, payload.get("extra", {})
