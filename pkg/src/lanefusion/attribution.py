"""Per-factor attribution of fusion gains.

Each fusion model's metric gain over the image-only baseline is modelled as a
sum of the contributions of the ingredients it contains. The 7 x 7 membership
matrix has rank 6 (LiDAR + adaptive = early + middle + late for every row), so
the least-squares system has a one-parameter family of solutions; we return
the minimum-norm one via the pseudoinverse.
"""
from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FACTORS = ("LiDAR", "dense", "early", "middle", "late", "road", "adaptive")
MODELS = ("V2", "V3", "V4", "V5", "V3r", "V4r", "V6")
MEMBERSHIP = np.array(
    [
        [1, 0, 1, 0, 0, 0, 0],  # V2: raw LiDAR, early
        [1, 1, 1, 0, 0, 0, 0],  # V3
        [1, 1, 0, 1, 0, 0, 0],  # V4
        [1, 1, 0, 0, 1, 0, 0],  # V5
        [1, 1, 1, 0, 0, 1, 0],  # V3r
        [1, 1, 0, 1, 0, 1, 0],  # V4r
        [1, 1, 1, 1, 0, 1, 1],  # V6
    ],
    dtype=np.float64,
)
NULL_VECTOR = np.array([1, 0, -1, -1, -1, 0, 1], dtype=np.float64)

# Aliases seen in result files
_MODEL_ALIASES = {"v3r+": "V3r_plus", "v3+": "V3r_plus"}


@dataclass(frozen=True)
class FactorDesign:
    factors: tuple[str, ...]
    models: tuple[str, ...]
    matrix: np.ndarray

    def row(self, model: str) -> np.ndarray:
        return self.matrix[self.models.index(model)]

    @property
    def rank(self) -> int:
        return int(np.linalg.matrix_rank(self.matrix))


@dataclass
class AttributionResult:
    factors: tuple[str, ...]
    contributions: np.ndarray
    residuals: np.ndarray
    normalized: np.ndarray

    def as_dict(self) -> dict:
        return {
            "contributions": dict(zip(self.factors, map(float, self.contributions))),
            "normalized": dict(zip(self.factors, map(float, self.normalized))),
            "residuals": list(map(float, self.residuals)),
        }


def build_design_matrix() -> FactorDesign:
    return FactorDesign(FACTORS, MODELS, MEMBERSHIP.copy())


def normalize_contributions(x) -> np.ndarray:
    """Shift by the minimum and divide by the sum of shifts; result sums to 1."""
    x = np.asarray(x, dtype=np.float64)
    shifted = x - x.min()
    total = shifted.sum()
    if total == 0:
        raise ValueError("cannot normalize contributions that are all equal")
    return shifted / total


def solve_attribution(design: FactorDesign, deltas) -> AttributionResult:
    """Minimum-norm least-squares contributions for one column of model deltas."""
    deltas = np.asarray(deltas, dtype=np.float64).reshape(-1)
    if deltas.shape != (len(design.models),):
        raise ValueError(f"expected {len(design.models)} deltas, got {deltas.shape}")
    if not np.all(np.isfinite(deltas)):
        raise ValueError("deltas must be finite")
    x = np.linalg.pinv(design.matrix) @ deltas
    residuals = design.matrix @ x - deltas
    try:
        normalized = normalize_contributions(x)
    except ValueError:
        normalized = np.full(len(x), 1.0 / len(x))
    return AttributionResult(design.factors, x, residuals, normalized)


def read_deltas_csv(path) -> dict[str, np.ndarray]:
    """Parse ``model,metric,delta[,case]`` rows into one 7-vector per column key.

    The column key is the metric, or ``"metric case"`` when a case column is
    present. Rows for models outside the design (V1, V3r+) are ignored.
    """
    columns: dict[str, dict[str, float]] = defaultdict(dict)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"model", "metric", "delta"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing column(s) {sorted(missing)}")
        for row in reader:
            model = row["model"].strip()
            model = _MODEL_ALIASES.get(model.lower(), model)
            if model not in MODELS:
                continue
            key = row["metric"].strip()
            if row.get("case"):
                key = f"{key} {row['case'].strip()}"
            columns[key][model] = float(row["delta"])
    out = {}
    for key, values in columns.items():
        absent = [m for m in MODELS if m not in values]
        if absent:
            raise ValueError(f"{path}: column {key!r} lacks deltas for {absent}")
        out[key] = np.array([values[m] for m in MODELS])
    if not out:
        raise ValueError(f"{path}: no usable delta rows")
    return out


def attribution_table(columns: dict[str, np.ndarray], design: FactorDesign | None = None) -> dict[str, AttributionResult]:
    design = design or build_design_matrix()
    return {key: solve_attribution(design, d) for key, d in columns.items()}


def write_report(results: dict[str, AttributionResult], out_dir) -> tuple[Path, Path]:
    """Factor x column tables: ``contributions.csv`` (signed, 2 dp) and ``contributions.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    keys = list(results)
    csv_path = out_dir / "contributions.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["factor"] + keys + [f"{k} normalized" for k in keys])
        for i, factor in enumerate(FACTORS):
            signed = [f"{results[k].contributions[i]:+.2f}" for k in keys]
            norm = [f"{results[k].normalized[i]:.4f}" for k in keys]
            writer.writerow([factor] + signed + norm)
    json_path = out_dir / "contributions.json"
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump({k: r.as_dict() for k, r in results.items()}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path
