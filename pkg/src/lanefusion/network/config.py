"""Declarative architecture variants.

Each of the nine variants fixes its fusion ingredients; only ``base_width``
and ``input_size`` are free. Anything else raises :class:`ConfigError`.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

STAGES = ("early", "middle", "late")


class ConfigError(ValueError):
    pass


# variant -> (fuse_stages, dense_lidar, multitask, adaptive_fuse)
VARIANTS = {
    "V1": (frozenset(), False, False, False),
    "V2": (frozenset({"early"}), False, False, False),
    "V3": (frozenset({"early"}), True, False, False),
    "V4": (frozenset({"middle"}), True, False, False),
    "V5": (frozenset({"late"}), True, False, False),
    "V3r": (frozenset({"early"}), True, True, False),
    "V4r": (frozenset({"middle"}), True, True, False),
    "V3r_plus": (frozenset({"early"}), True, True, True),
    "V6": (frozenset({"early", "middle"}), True, True, True),
}
_ALIASES = {"v3r+": "V3r_plus", "v3+": "V3r_plus", "v3r_plus": "V3r_plus"}


def canonical_variant(name: str) -> str:
    key = name.strip()
    if key in VARIANTS:
        return key
    lowered = key.lower()
    if lowered in _ALIASES:
        return _ALIASES[lowered]
    for v in VARIANTS:
        if v.lower() == lowered:
            return v
    raise ConfigError(f"unknown variant {name!r}; expected one of {', '.join(VARIANTS)}")


@dataclass(frozen=True)
class ArchitectureConfig:
    variant: str
    fuse_stages: frozenset = field(default=None)
    dense_lidar: bool | None = None
    multitask: bool | None = None
    adaptive_fuse: bool | None = None
    base_width: int = 16
    input_size: tuple[int, int] = (128, 256)

    def __post_init__(self):
        variant = canonical_variant(self.variant)
        object.__setattr__(self, "variant", variant)
        stages, dense, multitask, adaptive = VARIANTS[variant]
        given = {
            "fuse_stages": stages if self.fuse_stages is None else frozenset(self.fuse_stages),
            "dense_lidar": dense if self.dense_lidar is None else bool(self.dense_lidar),
            "multitask": multitask if self.multitask is None else bool(self.multitask),
            "adaptive_fuse": adaptive if self.adaptive_fuse is None else bool(self.adaptive_fuse),
        }
        expected = {"fuse_stages": stages, "dense_lidar": dense, "multitask": multitask, "adaptive_fuse": adaptive}
        for key, value in given.items():
            if value != expected[key]:
                raise ConfigError(f"{variant} requires {key}={_show(expected[key])}, got {_show(value)}")
            object.__setattr__(self, key, value)
        unknown = set(self.fuse_stages) - set(STAGES)
        if unknown:
            raise ConfigError(f"unknown fusion stages {sorted(unknown)}")
        h, w = self.input_size
        object.__setattr__(self, "input_size", (int(h), int(w)))
        if self.base_width < 1:
            raise ConfigError("base_width must be positive")
        if h % 16 or w % 16:
            raise ConfigError(f"input size {self.input_size} must be divisible by 16")

    @property
    def has_lidar(self) -> bool:
        return bool(self.fuse_stages)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fuse_stages"] = sorted(self.fuse_stages, key=STAGES.index)
        d["input_size"] = list(self.input_size)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ArchitectureConfig":
        data = dict(data)
        if "variant" not in data:
            raise ConfigError("architecture config needs a 'variant'")
        known = {"variant", "fuse_stages", "dense_lidar", "multitask", "adaptive_fuse", "base_width", "input_size"}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        if "input_size" in data:
            data["input_size"] = tuple(data["input_size"])
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "ArchitectureConfig":
        return cls.from_dict(json.loads(text))


def _show(value):
    if isinstance(value, frozenset):
        return "{" + ", ".join(sorted(value, key=STAGES.index)) + "}"
    return value
