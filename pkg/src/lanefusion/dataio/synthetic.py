"""Synthetic road scenes with lane labels and a simulated LiDAR sweep.

A pinhole camera 1.65 m above a flat road looks down a straight-to-gently-
curved carriageway with painted lane lines. The LiDAR sits 1.73 m up and
0.27 m behind the camera (KITTI-like axes: x forward, y left, z up); its
returns lie on the ground along beam rows, thinned so the projected coverage
hits the requested ratio.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry.maps import Calibration, PointCloud
from .frames import FrameRecord, quantize_image

CAMERA_HEIGHT = 1.65
LIDAR_HEIGHT = 1.73
LIDAR_BEHIND = 0.27
# LiDAR (x fwd, y left, z up) -> camera (x right, y down, z fwd)
LIDAR_TO_CAMERA = np.array([[0.0, -1.0, 0.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]])


@dataclass(frozen=True)
class SceneConfig:
    height: int = 128
    width: int = 256
    n_lines: int | None = None  # None draws 2..4 per frame
    coverage: float = 0.015
    focal: float = 160.0
    horizon: float = 40.0
    line_width: float = 0.3
    max_range: float = 80.0
    n_beams: int = 64

    def __post_init__(self):
        if self.n_lines is not None and self.n_lines < 2:
            raise ValueError("a road needs at least 2 lane lines")
        if not 0.0 <= self.coverage <= 1.0:
            raise ValueError("coverage must be a fraction")


def scene_calibration(config: SceneConfig) -> Calibration:
    K = np.array([[config.focal, 0.0, config.width / 2.0], [0.0, config.focal, config.horizon], [0.0, 0.0, 1.0]])
    # camera sits below and ahead of the LiDAR: T is the LiDAR origin in camera coordinates
    T = np.array([0.0, -(LIDAR_HEIGHT - CAMERA_HEIGHT), -LIDAR_BEHIND])
    return Calibration(K, LIDAR_TO_CAMERA, T)


@dataclass
class _Road:
    lines: np.ndarray  # lateral offsets at z = 0
    dashed: np.ndarray
    slope: float
    curvature: float
    half_extra: float
    dash_period: float
    dash_len: float
    dash_phase: float
    line_width: float

    def centre_shift(self, z):
        return self.slope * z + self.curvature * z * z

    def paint(self, x, z):
        """1 where (x, z) on the ground falls on a painted stripe."""
        lat = x - self.centre_shift(z)
        painted = np.zeros(np.broadcast(x, z).shape, dtype=bool)
        on_dash = np.mod(z + self.dash_phase, self.dash_period) < self.dash_len
        for offset, dashed in zip(self.lines, self.dashed):
            stripe = np.abs(lat - offset) < self.line_width / 2
            painted |= stripe & on_dash if dashed else stripe
        return painted

    def on_road(self, x, z):
        lat = x - self.centre_shift(z)
        return (lat > self.lines[0] - self.half_extra) & (lat < self.lines[-1] + self.half_extra)


def _draw_road(rng, config: SceneConfig) -> _Road:
    n = config.n_lines if config.n_lines is not None else int(rng.integers(2, 5))
    lane_width = rng.uniform(3.2, 3.8)
    lines = (np.arange(n) - (n - 1) / 2.0) * lane_width + rng.uniform(-0.8, 0.8)
    dashed = np.zeros(n, dtype=bool)
    dashed[1:-1] = rng.random(n - 2) < 0.6
    return _Road(
        lines=lines,
        dashed=dashed,
        slope=rng.uniform(-0.03, 0.03),
        curvature=rng.uniform(-4e-4, 4e-4),
        half_extra=rng.uniform(0.5, 1.5),
        dash_period=rng.uniform(8.0, 12.0),
        dash_len=rng.uniform(3.0, 4.5),
        dash_phase=rng.uniform(0.0, 12.0),
        line_width=config.line_width * rng.uniform(0.9, 1.2),
    )


def _ground(config: SceneConfig, u, v):
    """Camera-frame ground intersection of pixel coordinates (u, v); NaN above horizon."""
    dx = (u - config.width / 2.0) / config.focal
    dy = (v - config.horizon) / config.focal
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(dy > 0, CAMERA_HEIGHT / dy, np.nan)
    z = np.where(z <= config.max_range, z, np.nan)
    return dx * z, z


def _render(rng, config: SceneConfig, road: _Road):
    H, W = config.height, config.width
    offsets = (0.25, 0.75)
    paint_frac = np.zeros((H, W))
    road_frac = np.zeros((H, W))
    ground_frac = np.zeros((H, W))
    vv, uu = np.mgrid[0:H, 0:W].astype(np.float64)
    for oy in offsets:
        for ox in offsets:
            x, z = _ground(config, uu + ox, vv + oy)
            valid = np.isfinite(z)
            xs, zs = np.where(valid, x, 0.0), np.where(valid, z, 1.0)
            onroad = road.on_road(xs, zs) & valid
            paint_frac += road.paint(xs, zs) & onroad
            road_frac += onroad
            ground_frac += valid
    paint_frac /= 4
    road_frac /= 4
    ground_frac /= 4

    lane_mask = (paint_frac >= 0.5).astype(np.uint8)
    road_mask = (road_frac >= 0.5).astype(np.uint8)
    lane_mask &= road_mask

    # base colours
    sky = np.array([0.55, 0.7, 0.9]) * rng.uniform(0.8, 1.1)
    grass = np.array([0.3, 0.45, 0.2]) * rng.uniform(0.7, 1.2)
    asphalt = rng.uniform(0.22, 0.42)
    paint_rgb = np.array([0.92, 0.92, 0.9]) * rng.uniform(0.8, 1.05)

    t = np.clip(vv / max(config.horizon, 1.0), 0, 1)[..., None]
    image = sky * (1.0 - 0.3 * t) + 0.1 * t
    image = image * (1 - ground_frac[..., None])
    grass_tex = grass + rng.normal(0, 0.04, size=(H, W, 1))
    road_tex = asphalt + rng.normal(0, 0.025, size=(H, W, 1))
    image += ground_frac[..., None] * (1 - road_frac[..., None]) * grass_tex
    image += road_frac[..., None] * (1 - paint_frac[..., None]) * road_tex
    image += paint_frac[..., None] * paint_rgb

    # soft shadows across the road
    for _ in range(int(rng.integers(0, 3))):
        cy, cx = rng.uniform(config.horizon, H), rng.uniform(0, W)
        ry, rx = rng.uniform(5, 20), rng.uniform(15, 60)
        blob = np.exp(-(((vv - cy) / ry) ** 2 + ((uu - cx) / rx) ** 2))
        image *= 1.0 - rng.uniform(0.2, 0.45) * blob[..., None]

    image = quantize_image(np.clip(image, 0.0, 1.0))
    return image, lane_mask, road_mask


def _beam_rows(config: SceneConfig) -> np.ndarray:
    elev = np.deg2rad(np.linspace(2.0, -24.8, config.n_beams))
    down = elev < 0
    ground_dist = LIDAR_HEIGHT / np.tan(-elev[down])
    z_cam = ground_dist - LIDAR_BEHIND
    z_cam = z_cam[(z_cam > 0) & (z_cam < config.max_range)]
    rows = np.floor(config.horizon + config.focal * CAMERA_HEIGHT / z_cam).astype(int)
    return np.unique(rows[(rows > config.horizon) & (rows < config.height)])


def _simulate_lidar(rng, config: SceneConfig, road: _Road, calib: Calibration) -> PointCloud:
    H, W = config.height, config.width
    target = int(round(config.coverage * H * W))
    if target == 0:
        return PointCloud()
    first_ground = int(np.floor(config.horizon)) + 1
    ground_rows = np.arange(first_ground, H)
    beam = _beam_rows(config)
    cand = (beam[:, None] * W + np.arange(W)[None, :]).ravel()
    if target <= len(cand):
        chosen = rng.choice(cand, size=target, replace=False)
    else:
        others = np.setdiff1d((ground_rows[:, None] * W + np.arange(W)[None, :]).ravel(), cand)
        extra = rng.choice(others, size=min(target - len(cand), len(others)), replace=False)
        chosen = np.concatenate([cand, extra])
    chosen = np.sort(chosen)
    v, u = np.divmod(chosen, W)
    # land inside the pixel, away from its edges
    u = u + 0.5 + rng.uniform(-0.3, 0.3, size=len(u))
    v = v + 0.5 + rng.uniform(-0.3, 0.3, size=len(v))
    x, z = _ground(config, u, v)
    ok = np.isfinite(z)
    x, z = x[ok], z[ok]
    cam = np.stack([x, np.full_like(x, CAMERA_HEIGHT), z], axis=1)
    pts = (cam - calib.T) @ calib.R  # R^T (p - T), row-vector form

    painted = road.paint(x, z) & road.on_road(x, z)
    onroad = road.on_road(x, z)
    refl = np.where(painted, 0.8, np.where(onroad, 0.12, 0.3))
    refl = np.clip(refl + rng.normal(0, 0.04, size=len(refl)), 0.0, 1.0)
    return PointCloud(np.column_stack([pts, refl]).astype(np.float32))


def generate_synthetic_frame(seed: int, config: SceneConfig | None = None) -> FrameRecord:
    config = config or SceneConfig()
    rng = np.random.default_rng(seed)
    road = _draw_road(rng, config)
    calib = scene_calibration(config)
    image, lane_mask, road_mask = _render(rng, config, road)
    cloud = _simulate_lidar(rng, config, road, calib)
    return FrameRecord(
        image=image,
        cloud=cloud,
        calib=calib,
        lane_mask=lane_mask,
        road_mask=road_mask,
        frame_id=f"{seed:06d}",
        meta={"seed": seed},
    )


def frame_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0] % 1_000_000)


def generate_synthetic_dataset(n: int, seed: int, config: SceneConfig | None = None) -> list[FrameRecord]:
    frames = []
    for i in range(n):
        frame = generate_synthetic_frame(frame_seed(seed, i), config)
        frames.append(frame.replace(frame_id=f"{i:06d}"))
    return frames
