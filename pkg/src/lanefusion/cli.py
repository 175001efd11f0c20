"""Batch command line: preprocess, synth, train, eval, ablate, attribute.

Exit codes: 0 success, 1 usage error, 2 runtime error (missing files, bad data).
"""
from __future__ import annotations

import argparse
import json
import logging
import shlex
import sys
from pathlib import Path

import numpy as np

log = logging.getLogger("lanefusion")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="lanefusion",
        description="LiDAR-camera lane segmentation: preprocessing, training, evaluation, attribution.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    p = sub.add_parser("preprocess", help="project, complete and normalize LiDAR maps for a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--height", type=int, default=128)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--seed", type=int, default=0, help="unused; accepted for uniform invocation")

    p = sub.add_parser("synth", help="generate a synthetic dataset with manifest")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--coverage", type=float, default=0.015)
    p.add_argument("--height", type=int, default=128)
    p.add_argument("--width", type=int, default=256)

    p = sub.add_parser("train", help="train one architecture variant")
    p.add_argument("--config", required=True, help="JSON config file or a variant name such as V6")
    p.add_argument("--data", required=True)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--batch-size", type=int, default=4)
    p.add_argument("--lr0", type=float, default=1e-4)
    p.add_argument("--split", choices=("train", "all"), default="train")
    p.add_argument("--augment", action="store_true", help="replayable per-record augmentation")
    p.add_argument("--checkpoint-every", type=int, default=0)
    p.add_argument("--base-width", type=int, default=None, help="override the config's base width")

    p = sub.add_parser("eval", help="evaluate a checkpoint, optionally with a lost modality")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data")
    p.add_argument("--mode", choices=("both", "only_image", "only_points", "all"), default="both")
    p.add_argument("--split", choices=("train", "val", "test", "all"), default="test")
    p.add_argument("--seed", type=int, default=0, help="split seed")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", help="report directory (default: next to the checkpoint)")
    p.add_argument("--overlays", help="write prediction overlay PNGs here")

    p = sub.add_parser("ablate", help="train and evaluate a variant sweep, write the delta table")
    p.add_argument("--data", required=True)
    p.add_argument("--variants", default="V1,V2,V3,V4,V5,V3r,V4r,V3r_plus,V6")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--base-width", type=int, default=8)
    p.add_argument("--batch-size", type=int, default=4)
    p.add_argument("--out", default="ablation")

    p = sub.add_parser("attribute", help="per-factor contributions from a model delta CSV")
    p.add_argument("--deltas", required=True)
    p.add_argument("--out", help="report directory (default: next to the deltas file)")
    return parser


def _require_file(path) -> Path:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    return path


def _load_frames(data):
    from .dataio.frames import load_dataset

    _require_file(data)
    return load_dataset(data)


def _select(frames, split: str, seed: int):
    from .dataio.splits import split_dataset

    if split == "all":
        return frames
    indices = split_dataset(len(frames), seed).subset(split)
    return [frames[i] for i in indices]


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_preprocess(args) -> int:
    from .dataio.frames import read_frame, read_manifest
    from .geometry import compose_modal_image, knn_complete, project_points
    from .training.data import resize_frame

    manifest = _require_file(args.manifest)
    records = read_manifest(manifest)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    index = []
    for rec in records:
        frame = resize_frame(read_frame(manifest.parent if manifest.is_file() else manifest, rec),
                             (args.height, args.width))
        sparse = project_points(frame.cloud, frame.calib, args.width, args.height)
        dense = knn_complete(sparse, args.k)
        composed = compose_modal_image(dense)
        name = f"{rec['id']}.npz"
        np.savez_compressed(
            out / name,
            sparse=sparse.channels.astype(np.float32),
            known=sparse.known,
            dense=dense.channels.astype(np.float32),
            composed=composed.channels.astype(np.float32),
            degenerate=np.array(dense.degenerate),
        )
        index.append({"id": rec["id"], "maps": name, "coverage": round(sparse.coverage, 6)})
    _write_text(out / "modal_manifest.jsonl", "".join(json.dumps(r, sort_keys=True) + "\n" for r in index))
    print(f"wrote {len(index)} modal maps to {out}")
    return EXIT_OK


def cmd_synth(args) -> int:
    from .dataio.frames import MANIFEST_NAME, write_frame, write_manifest
    from .dataio.synthetic import SceneConfig, generate_synthetic_dataset

    if args.n < 1:
        raise UsageError("--n must be positive")
    config = SceneConfig(height=args.height, width=args.width, coverage=args.coverage)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    records = [write_frame(out, frame) for frame in generate_synthetic_dataset(args.n, args.seed, config)]
    write_manifest(out / MANIFEST_NAME, records)
    print(f"wrote {len(records)} frames to {out}")
    return EXIT_OK


def _load_config(source: str, base_width: int | None):
    from .network.config import VARIANTS, ArchitectureConfig, canonical_variant

    path = Path(source)
    if path.exists():
        data = json.loads(path.read_text(encoding="utf-8"))
    else:
        try:
            data = {"variant": canonical_variant(source)}
        except ValueError:
            if source.endswith(".json") or "/" in source:
                raise FileNotFoundError(source) from None
            raise UsageError(f"--config {source!r} is neither a file nor one of {', '.join(VARIANTS)}") from None
    if base_width is not None:
        data["base_width"] = base_width
    return ArchitectureConfig.from_dict(data)


def _train_one(config, frames, epochs, seed, batch_size, lr0=1e-4, augment=False, out=None, checkpoint_every=0):
    from .dataio.augment import AugmentationPlan
    from .network.model import build_model
    from .training import dataset_for, fit

    model = build_model(config, seed=seed)
    train = dataset_for(model, frames)
    plan = AugmentationPlan.default(seed) if augment else None
    return fit(
        model, train, epochs=epochs, seed=seed, batch_size=batch_size, lr0=lr0, augment=plan,
        checkpoint_dir=out, checkpoint_every=checkpoint_every,
    )


def cmd_train(args, argv) -> int:
    from .network.checkpoint import save_checkpoint

    config = _load_config(args.config, args.base_width)
    frames = _select(_load_frames(args.data), args.split, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model, report = _train_one(
        config, frames, args.epochs, args.seed, args.batch_size, args.lr0, args.augment, out, args.checkpoint_every
    )
    save_checkpoint(out / "model.ckpt", model, epochs=args.epochs, seed=args.seed, data=str(args.data))
    report.to_csv(out / "history.csv")
    _write_text(out / "config.json", json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")
    _write_text(out / "command.txt", shlex.join(["lanefusion", *argv]) + "\n")
    print(f"trained {config.variant} for {args.epochs} epochs; final loss {report.loss[-1]:.5f}, "
          f"train lane acc {report.lane_acc[-1]:.4f}")
    return EXIT_OK


def _overlay(image: np.ndarray, pred: np.ndarray) -> np.ndarray:
    out = image.copy()
    out[pred] = 0.4 * out[pred] + 0.6 * np.array([1.0, 0.0, 0.0])
    return out


def cmd_eval(args) -> int:
    import torch

    from .dataio.frames import write_image
    from .metrics import MODES, MODALITY_COLUMNS, evaluate, modality_table_row, rows_to_csv
    from .network.checkpoint import load_checkpoint
    from .training import dataset_for

    ckpt = _require_file(args.checkpoint)
    if not args.data:
        raise UsageError("eval needs --data")
    model, _ = load_checkpoint(ckpt)
    frames = _select(_load_frames(args.data), args.split, args.seed)
    dataset = dataset_for(model, frames)
    modes = MODES if args.mode == "all" else (args.mode,)
    if not model.has_lidar:
        modes = tuple(m for m in modes if m != "only_points") if args.mode == "all" else modes
    out = Path(args.out) if args.out else ckpt.parent
    reports = {}
    for mode in modes:
        report = evaluate(model, dataset, mode, threshold=args.threshold)
        reports[mode] = report
        _write_text(out / f"metrics_{mode}.json", report.to_json())
        print(f"{report.model} {mode}: LAcc {100 * report.LAcc:.2f} Acc {100 * report.Acc:.2f} "
              f"mAcc {100 * report.mAcc:.2f} F2 {100 * report.F2:.1f} ({report.fps:.1f} frames/s local)")
    rows = [r.csv_row() for r in reports.values()]
    _write_text(out / "metrics.csv", rows_to_csv(rows, ["model", "mode", "LAcc", "Acc", "mAcc", "F2", "fps_local"]))
    if set(MODES) <= set(reports):
        _write_text(out / "modality_lost.csv", rows_to_csv([modality_table_row(reports)], MODALITY_COLUMNS))

    if args.overlays:
        odir = Path(args.overlays)
        odir.mkdir(parents=True, exist_ok=True)
        with torch.no_grad():
            for i, frame in enumerate(dataset.frames):
                batch = dataset.batch([i])
                pred = model(batch.image, batch.lidar).lane_logprob[0, 1].exp() > args.threshold
                write_image(odir / f"{frame.frame_id or i}.png", _overlay(frame.image, pred.numpy()))
    return EXIT_OK


def cmd_ablate(args) -> int:
    from .attribution import MODELS, attribution_table, write_report
    from .metrics import evaluate, rows_to_csv
    from .network.config import VARIANTS, ArchitectureConfig, canonical_variant
    from .training import dataset_for

    variants = [canonical_variant(v) for v in args.variants.split(",") if v.strip()]
    if "V1" not in variants:
        variants.insert(0, "V1")
    frames = _load_frames(args.data)
    train_frames = _select(frames, "train", args.seed)
    test_frames = _select(frames, "test", args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    results = {}
    for variant in variants:
        config = ArchitectureConfig(variant, base_width=args.base_width)
        model, _ = _train_one(config, train_frames, args.epochs, args.seed, args.batch_size)
        results[variant] = evaluate(model, dataset_for(model, test_frames))
        print(f"{variant}: LAcc {100 * results[variant].LAcc:.2f} mAcc {100 * results[variant].mAcc:.2f}")

    base = results["V1"]
    table, deltas = [], []
    for variant, rep in results.items():
        stages, dense, multitask, adaptive = VARIANTS[variant]
        row = {
            "model": variant,
            "dense": int(dense), "early": int("early" in stages), "mid": int("middle" in stages),
            "late": int("late" in stages), "road": int(multitask), "adap": int(adaptive),
        }
        for metric in ("LAcc", "mAcc", "F2"):
            value = 100 * getattr(rep, metric)
            if variant == "V1":
                row[metric] = f"{value:.2f}"
            else:
                delta = value - 100 * getattr(base, metric)
                row[metric] = f"{delta:+.2f}"
                deltas.append({"model": variant, "metric": metric, "delta": f"{delta:.4f}"})
        table.append(row)
    cols = ["model", "dense", "early", "mid", "late", "road", "adap", "LAcc", "mAcc", "F2"]
    _write_text(out / "ablation.csv", rows_to_csv(table, cols))
    _write_text(out / "deltas.csv", rows_to_csv(deltas, ["model", "metric", "delta"]))
    if all(m in results for m in MODELS):
        from .attribution import read_deltas_csv

        write_report(attribution_table(read_deltas_csv(out / "deltas.csv")), out)
    print(f"wrote ablation table to {out}")
    return EXIT_OK


def cmd_attribute(args) -> int:
    from .attribution import FACTORS, attribution_table, read_deltas_csv, write_report

    path = _require_file(args.deltas)
    results = attribution_table(read_deltas_csv(path))
    out = Path(args.out) if args.out else path.parent
    csv_path, _ = write_report(results, out)
    keys = list(results)
    print("factor    " + "  ".join(f"{k:>10}" for k in keys))
    for i, factor in enumerate(FACTORS):
        print(f"{factor:<9} " + "  ".join(f"{results[k].contributions[i]:>+10.2f}" for k in keys))
    print(f"wrote {csv_path}")
    return EXIT_OK


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if args.command is None:
        parser.print_help()
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")

    handlers = {
        "preprocess": cmd_preprocess,
        "synth": cmd_synth,
        "train": lambda a: cmd_train(a, argv),
        "eval": cmd_eval,
        "ablate": cmd_ablate,
        "attribute": cmd_attribute,
    }
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        print(f"lanefusion {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        missing = exc.filename or (exc.args[0] if exc.args else "")
        print(f"lanefusion {args.command}: file not found: {missing}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"lanefusion {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
