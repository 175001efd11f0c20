"""Calibration text files.

Native layout is three labelled rows, row-major::

    K: fx 0 cx 0 fy cy 0 0 1
    R: r11 r12 r13 r21 r22 r23 r31 r32 r33
    T: tx ty tz

KITTI object/road calibration files (``P2:``, ``Tr_velo_to_cam:``, optional
``R0_rect:``) are accepted too and folded into the same (K, R, T) triple.
"""
from __future__ import annotations

import logging

import numpy as np

from ..geometry.maps import Calibration, CalibrationError

log = logging.getLogger(__name__)


class CalibrationParseError(ValueError):
    def __init__(self, key: str, message: str | None = None):
        self.key = key
        super().__init__(message or f"calibration is missing required row {key!r}")


def _rows(text: str) -> dict[str, np.ndarray]:
    rows = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise CalibrationParseError("?", f"line {lineno}: expected 'KEY: values'")
        key, values = line.split(":", 1)
        try:
            rows[key.strip()] = np.array([float(v) for v in values.split()], dtype=np.float64)
        except ValueError as exc:
            raise CalibrationParseError(key.strip(), f"line {lineno}: {exc}") from None
    return rows


def _take(rows: dict, key: str, size: int) -> np.ndarray:
    if key not in rows:
        raise CalibrationParseError(key)
    values = rows[key]
    if values.size != size:
        raise CalibrationParseError(key, f"row {key!r} has {values.size} values, expected {size}")
    return values


def _nearest_rotation(M: np.ndarray) -> np.ndarray:
    U, _, Vt = np.linalg.svd(M)
    R = U @ Vt
    if np.linalg.det(R) < 0:
        U[:, -1] *= -1
        R = U @ Vt
    return R


def kitti_to_calibration(P2: np.ndarray, Tr: np.ndarray, R0: np.ndarray | None = None) -> Calibration:
    """Fold ``P2 @ R0 @ Tr`` into intrinsics plus a rigid transform.

    ``P2 = K [I | b]`` with ``b = K^-1 P2[:, 3]``, so the equivalent extrinsics
    are ``R = R0 Tr_R`` and ``T = R0 Tr_t + b``.
    """
    P2 = np.asarray(P2, dtype=np.float64).reshape(3, 4)
    Tr = np.asarray(Tr, dtype=np.float64).reshape(3, 4)
    R0 = np.eye(3) if R0 is None else np.asarray(R0, dtype=np.float64).reshape(3, 3)
    K = P2[:, :3].copy()
    K[np.abs(K) < 1e-12] = 0.0
    K = K / K[2, 2]
    b = np.linalg.solve(K, P2[:, 3] / P2[2, 2])
    R = R0 @ Tr[:, :3]
    T = R0 @ Tr[:, 3] + b
    drift = np.max(np.abs(R.T @ R - np.eye(3)))
    if drift > 1e-6:
        # printed KITTI matrices carry ~1e-3 rounding; snap to the nearest rotation
        if drift > 1e-2:
            raise CalibrationError(f"KITTI rotation is far from orthonormal (max error {drift:.3g})")
        log.info("re-orthonormalizing KITTI rotation (max error %.3g)", drift)
        R = _nearest_rotation(R)
    return Calibration(K, R, T)


def parse_calibration(text: str) -> Calibration:
    if not text or not text.strip():
        raise CalibrationParseError("K", "calibration text is empty")
    rows = _rows(text)
    if "K" not in rows and "P2" in rows:
        return kitti_to_calibration(
            _take(rows, "P2", 12),
            _take(rows, "Tr_velo_to_cam", 12),
            _take(rows, "R0_rect", 9) if "R0_rect" in rows else None,
        )
    K = _take(rows, "K", 9).reshape(3, 3)
    R = _take(rows, "R", 9).reshape(3, 3)
    T = _take(rows, "T", 3)
    return Calibration(K, R, T)


def format_calibration(calib: Calibration) -> str:
    def row(key, values):
        return key + ": " + " ".join(repr(float(v)) for v in np.ravel(values))

    return "\n".join([row("K", calib.K), row("R", calib.R), row("T", calib.T)]) + "\n"


def read_calibration(path) -> Calibration:
    with open(path, encoding="utf-8") as fh:
        return parse_calibration(fh.read())


def write_calibration(path, calib: Calibration) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_calibration(calib))
