"""Command-line surface.

Subcommands cover the full pipeline: synthetic dataset generation,
catalog generation/verification, dataset density analysis, curriculum
training, and checkpoint evaluation. Every command is deterministic
given its flags; reruns produce byte-identical CSV/JSON outputs.

Exit codes: 0 success, 2 config error, 3 data error, 4 verification
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .catalog import (
    canonical_catalog_256x512,
    catalog_from_json,
    catalog_to_json,
    enumerate_syllabuses,
)
from .dataset import DepthFormatError, read_dataset, write_dataset
from .depthmap import density
from .metrics import CSV_COLUMNS, EmptyMaskError, evaluate, merge_reports
from .model import DepthNet
from .pooling import dilate, resize_nearest
from .scheduler import plan_from_catalog, plan_from_json, plan_to_json
from .synthetic import DEPTH_MODELS, generate_dataset
from .training import TrainConfig, train, write_event_log

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_VERIFY = 4


class ConfigError(ValueError):
    pass


def _parse_size(text: str) -> tuple[int, int]:
    try:
        h, w = text.lower().split("x")
        size = (int(h), int(w))
    except ValueError:
        raise ConfigError(f"size must look like 256x512, got {text!r}")
    if size[0] < 2 or size[1] < 2:
        raise ConfigError(f"target size must be at least 2x2, got {text!r}")
    return size


def cmd_synth(args) -> int:
    records = generate_dataset(args.count, *_parse_size(args.size), args.density, args.seed, args.model)
    if not args.dense:
        for rec in records:
            rec.dense_truth = None
    write_dataset(records, args.out)
    print(f"wrote {len(records)} samples to {args.out}")
    return EXIT_OK


def cmd_catalog(args) -> int:
    target = _parse_size(args.target)
    catalog = canonical_catalog_256x512() if args.canonical else enumerate_syllabuses(target)
    if args.verify:
        enumerated = enumerate_syllabuses((256, 512))
        canonical = canonical_catalog_256x512()
        sizes = [s.pooled_size for s in enumerated.entries]
        expected = [s.pooled_size for s in canonical.entries]
        if sizes != expected:
            print("verification FAILED: enumerated 256x512 sizes differ from the canonical table", file=sys.stderr)
            for i, (got, want) in enumerate(zip(sizes, expected)):
                if got != want:
                    print(f"  entry {i}: enumerated {got}, canonical {want}", file=sys.stderr)
            return EXIT_VERIFY
        print(f"verification OK: {len(sizes)} entries match the canonical table")
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(catalog_to_json(catalog))
        print(f"wrote catalog ({len(catalog)} entries) to {args.out}")
    else:
        print(catalog_to_json(catalog))
    return EXIT_OK


def _write_density_svg(rows, path) -> None:
    bar_w, gap, height = 18, 4, 220
    width = len(rows) * (bar_w + gap) + 60
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height + 60}">',
        f'<text x="10" y="16" font-size="12">mean density per syllabus</text>',
    ]
    for i, row in enumerate(rows):
        h = row["mean_density"] * height
        x = 40 + i * (bar_w + gap)
        y = 20 + height - h
        parts.append(f'<rect x="{x}" y="{y:.2f}" width="{bar_w}" height="{h:.2f}" fill="#4878a8"/>')
        parts.append(
            f'<text x="{x + bar_w / 2:.1f}" y="{height + 36}" font-size="8" text-anchor="middle">{row["index"]}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts))


def cmd_density(args) -> int:
    records = read_dataset(args.dataset, load_images=False)
    target = _parse_size(args.target) if args.target else records[0].ground_truth.shape
    if args.catalog:
        catalog = catalog_from_json(Path(args.catalog).read_text())
    else:
        catalog = enumerate_syllabuses(target)
    densities = np.empty((len(records), len(catalog)))
    for r, rec in enumerate(records):
        for i, syllabus in enumerate(catalog.entries):
            densities[r, i] = density(dilate(rec.ground_truth, syllabus, target))
    rows = [
        {
            "index": i,
            "label": catalog.entries[i].label,
            "mean_density": float(densities[:, i].mean()),
            "std_density": float(densities[:, i].std()),
        }
        for i in range(len(catalog))
    ]
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "label", "mean_density", "std_density"])
        for row in rows:
            writer.writerow([row["index"], row["label"], repr(row["mean_density"]), repr(row["std_density"])])
    print(f"wrote density profile for {len(records)} samples to {args.out}")
    if args.svg:
        _write_density_svg(rows, args.svg)
        print(f"wrote chart to {args.svg}")
    return EXIT_OK


def cmd_train(args) -> int:
    problems = []
    if args.strict and args.min_decrease is None:
        problems.append("strict mode requires an explicit --lambda")
    if args.strict and args.patience is None:
        problems.append("strict mode requires an explicit --patience")
    if not Path(args.dataset).exists():
        problems.append(f"dataset directory not found: {args.dataset}")
    if args.plan and not Path(args.plan).exists():
        problems.append(f"plan file not found: {args.plan}")
    if problems:
        for p in problems:
            print(f"config error: {p}", file=sys.stderr)
        return EXIT_CONFIG
    min_decrease = 0.999 if args.min_decrease is None else args.min_decrease
    patience = [50] if args.patience is None else list(args.patience)

    records = read_dataset(args.dataset)
    target = records[0].ground_truth.shape
    catalog = enumerate_syllabuses(target)
    if args.plan:
        plan = plan_from_json(Path(args.plan).read_text(), catalog)
    else:
        selection = [catalog.identity_index] if args.curriculum == "none" else args.curriculum
        patience_list = patience if len(patience) > 1 else int(patience[0])
        plan = plan_from_catalog(catalog, selection, patience_list, min_decrease, args.mode)
    model = DepthNet(widths=tuple(args.widths), seed=args.seed)
    config = TrainConfig(
        steps=args.steps,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        seed=args.seed,
        loss=args.loss,
        cache_dilations=args.cache_dilations,
    )
    result = train(plan, records, model, config)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model.save(out / "checkpoint.npz")
    write_event_log(result.events, out / "events.csv")
    (out / "plan.json").write_text(plan_to_json(plan, catalog))
    advances = sum(1 for e in result.events if e.advanced)
    summary = {
        "steps_run": result.steps_run,
        "final_loss": result.events[-1].loss if result.events else None,
        "syllabus_advances": advances,
        "finished_plan": result.scheduler.finished,
        "final_syllabus_index": result.scheduler.syllabus_index,
        "config": {
            "curriculum": args.curriculum,
            "lambda": min_decrease,
            "patience": patience,
            "mode": args.mode,
            "steps": args.steps,
            "batch_size": args.batch_size,
            "learning_rate": args.lr,
            "loss": args.loss,
            "seed": args.seed,
            "widths": list(args.widths),
        },
        "scheduler_state": result.scheduler.state_dict(),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    print(f"trained {result.steps_run} steps, {advances} syllabus advances; outputs in {out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    model = DepthNet.load(args.checkpoint)
    records = read_dataset(args.dataset)
    gt_attr = "dense_truth" if args.against == "dense" else "ground_truth"
    reports = {}
    for rec in records:
        gt = getattr(rec, gt_attr)
        if gt is None:
            raise DepthFormatError(f"sample {rec.id} has no {args.against} depth map")
        if rec.image is None:
            raise DepthFormatError(f"sample {rec.id} has no image")
        h, w = rec.image.shape[:2]
        h4, w4 = (h // 4) * 4, (w // 4) * 4
        image = rec.image
        if (h4, w4) != (h, w):
            rows = ((2 * np.arange(h4) + 1) * h) // (2 * h4)
            cols = ((2 * np.arange(w4) + 1) * w) // (2 * w4)
            image = image[rows][:, cols]
        pred = model.predict(image[None], batch_size=1)[0].astype(np.float64)
        pred = resize_nearest(pred, gt.shape)
        reports[rec.id] = evaluate(gt, pred)
    merged = merge_reports(list(reports.values()))
    payload = {
        "all": merged.to_dict(),
        "samples": {rid: rep.to_dict() for rid, rep in sorted(reports.items())},
    }
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(json.dumps(payload, indent=2))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", *CSV_COLUMNS, "n_valid"])
            for rid, rep in sorted(reports.items()):
                writer.writerow([rid, *[repr(v) for v in rep.to_row()], rep.n_valid])
            writer.writerow(["ALL", *[repr(v) for v in merged.to_row()], merged.n_valid])
    print(f"evaluated {len(records)} samples; rms={merged.rms:.4f} delta1={merged.delta1:.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="depthcurriculum", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic sparse-depth dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=64)
    p.add_argument("--size", default="64x128")
    p.add_argument("--density", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model", choices=DEPTH_MODELS, default=None, help="scene family (default: mix)")
    p.add_argument("--dense", action="store_true", help="also store the dense reference maps")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("catalog", help="enumerate a syllabus catalog")
    p.add_argument("--target", default="256x512")
    p.add_argument("--out", default=None)
    p.add_argument("--canonical", action="store_true", help="emit the built-in 256x512 table")
    p.add_argument("--verify", action="store_true", help="check the enumerator against the built-in table")
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("density", help="per-syllabus density profile of a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--target", default=None)
    p.add_argument("--catalog", default=None, help="catalog JSON (default: enumerate for the data size)")
    p.add_argument("--svg", default=None, help="optional bar-chart output")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("train", help="run curriculum training")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--curriculum", default="A", help="A, B, C, full, or none (identity baseline)")
    p.add_argument("--plan", default=None, help="plan JSON overriding --curriculum")
    p.add_argument("--lambda", dest="min_decrease", type=float, default=None, help="minimum decrease (default 0.999)")
    p.add_argument("--patience", type=int, nargs="+", default=None, help="scalar or per-syllabus list (default 50)")
    p.add_argument("--mode", choices=("consecutive", "cumulative"), default="consecutive")
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--loss", choices=("l1", "l2"), default="l1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--widths", type=int, nargs=2, default=(8, 16))
    p.add_argument("--cache-dilations", action="store_true")
    p.add_argument("--strict", action="store_true", help="require explicit --lambda and --patience")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True, help="metrics JSON path")
    p.add_argument("--csv", default=None, help="optional per-sample CSV")
    p.add_argument("--against", choices=("depth", "dense"), default="depth")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DepthFormatError, EmptyMaskError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
