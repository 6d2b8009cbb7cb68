"""Command-line harness: evaluate prediction dumps, compute ground-truth
statistics, categorize interactions, and run the synthetic optimization lab.

Ground-truth data is a directory of whitespace-separated ``frame agent_id x y``
text files.  Each file is one scene, or, when the directory contains
subdirectories, each subdirectory is one scene whose files are windowed
separately (scenes recorded in several chunks).  All randomness sits behind
``--seed``; identical invocations produce byte-identical outputs.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import ingest, interactions, metrics, toylab, trajdata
from .errors import TrajevalError
from .losses import LossConfig

_LOSS_PRESETS = {
    "marginal": dict(use_marginal=True, use_joint=False),
    "joint": dict(use_marginal=False, use_joint=True),
    "both": dict(use_marginal=True, use_joint=True),
}


def _max_workers() -> int | None:
    env = os.environ.get("TRAJEVAL_THREADS")
    if env is not None:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def load_gt(gt_dir, cfg: trajdata.WindowConfig, units: str = "meters",
            native_fps: float | None = None) -> list[trajdata.Sequence]:
    """Window every scene file under ``gt_dir`` into evaluation sequences."""
    root = Path(gt_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"ground-truth directory {root} does not exist")
    subdirs = sorted(p for p in root.iterdir() if p.is_dir())
    if subdirs:
        scenes = [(d.name, sorted(d.glob("*.txt"))) for d in subdirs]
    else:
        scenes = [(f.stem, [f]) for f in sorted(root.glob("*.txt"))]
    scenes = [(name, files) for name, files in scenes if files]
    if not scenes:
        raise FileNotFoundError(f"no .txt scene files under {root}")
    seqs: list[trajdata.Sequence] = []
    for scene, files in scenes:
        for path in files:
            records = ingest.parse_ethucy(path)
            if native_fps is not None:
                records = ingest.downsample(records, native_fps, cfg.target_fps)
            seqs.extend(trajdata.window_sequences(
                records, cfg, scene_id=scene, source=path.stem, units=units))
    return seqs


def _window_cfg(args) -> trajdata.WindowConfig:
    return trajdata.WindowConfig(obs_len=args.obs_len, pred_len=args.pred_len,
                                 stride=args.stride, target_fps=args.fps)


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _format_table(rows: list[tuple], header: tuple) -> str:
    cells = [tuple(str(c) for c in row) for row in [header, *rows]]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def cmd_evaluate(args) -> int:
    # validate the whole configuration before any file IO
    cfg = _window_cfg(args)
    eval_cfg = metrics.EvalConfig(
        metrics=tuple(args.metrics.split(",")),
        radius_b=args.radius,
        squared=args.squared,
        weighting=args.weighting,
        strict=args.strict,
    )
    seqs = load_gt(args.gt, cfg, units=args.units, native_fps=args.native_fps)
    seq_index = {s.sequence_id: s for s in seqs}
    pred_map = ingest.parse_predictions(args.pred, sequences=seq_index)
    if args.samples is not None:
        bad = {p.num_samples for p in pred_map.values() if p.num_samples != args.samples}
        if bad:
            raise ValueError(f"expected K={args.samples} samples, dump has K in {sorted(bad)}")
    report = metrics.evaluate(pred_map, seqs, eval_cfg, max_workers=_max_workers())
    if args.format == "json":
        _emit(json.dumps(report.to_json_dict(include_sequences=args.per_sequence),
                         indent=2, sort_keys=True) + "\n", args.output)
    elif args.format == "csv":
        lines = ["scene,metric,value"]
        lines += [f"{s},{m},{v!r}" for s, m, v in report.to_csv_rows()]
        _emit("\n".join(lines) + "\n", args.output)
    else:
        rows = [(s, m, f"{v:.6f}") for s, m, v in report.to_csv_rows()]
        _emit(_format_table(rows, ("scene", "metric", "value")), args.output)
    if report.missing:
        sys.stderr.write(f"warning: {len(report.missing)} sequence(s) had no predictions\n")
    return 0


def cmd_gt_stats(args) -> int:
    cfg = _window_cfg(args)
    seqs = load_gt(args.gt, cfg, units=args.units, native_fps=args.native_fps)
    thresholds = (interactions.load_thresholds(args.thresholds)
                  if args.thresholds else interactions.InteractionThresholds())
    cr = metrics.gt_collision_rate(seqs, args.radius, weighting=args.weighting)
    by_scene: dict[str, list[trajdata.Sequence]] = {}
    for s in seqs:
        by_scene.setdefault(s.scene_id, []).append(s)
    stats = {}
    for scene in sorted(by_scene):
        mean_agents, total = trajdata.density_stats(by_scene[scene])
        stats[scene] = {
            "num_sequences": len(by_scene[scene]),
            "mean_agents_per_sequence": mean_agents,
            "total_agents": total,
            "gt_collision_rate": cr[scene],
            "categories": interactions.category_stats(by_scene[scene], thresholds),
        }
    overall = {
        "mean_gt_collision_rate": sum(cr.values()) / len(cr),
        "total_agents": sum(s["total_agents"] for s in stats.values()),
        "categories": interactions.category_stats(seqs, thresholds),
    }
    doc = {"schema": "trajeval-gtstats v1", "scenes": stats, "overall": overall}
    if args.format == "json":
        _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.output)
    elif args.format == "csv":
        lines = ["scene,stat,value"]
        for scene in sorted(stats):
            entry = stats[scene]
            for key in ("num_sequences", "mean_agents_per_sequence", "total_agents",
                        "gt_collision_rate"):
                lines.append(f"{scene},{key},{entry[key]!r}")
            for cat, v in sorted(entry["categories"].items()):
                lines.append(f"{scene},category_{cat},{v!r}")
        lines.append(f"overall,mean_gt_collision_rate,{overall['mean_gt_collision_rate']!r}")
        _emit("\n".join(lines) + "\n", args.output)
    else:
        rows = []
        for scene in sorted(stats):
            entry = stats[scene]
            rows.append((scene, entry["num_sequences"],
                         f"{entry['mean_agents_per_sequence']:.2f}",
                         entry["total_agents"], f"{entry['gt_collision_rate']:.4f}",
                         " ".join(f"{c}={v:.3f}" for c, v in sorted(entry["categories"].items()))))
        rows.append(("overall", sum(s["num_sequences"] for s in stats.values()),
                     "", overall["total_agents"],
                     f"{overall['mean_gt_collision_rate']:.4f}",
                     " ".join(f"{c}={v:.3f}" for c, v in sorted(overall["categories"].items()))))
        _emit(_format_table(rows, ("scene", "sequences", "mean_agents", "agents",
                                   "gt_cr", "categories")), args.output)
    return 0


def cmd_categorize(args) -> int:
    cfg = _window_cfg(args)
    seqs = load_gt(args.gt, cfg, units=args.units, native_fps=args.native_fps)
    thresholds = (interactions.load_thresholds(args.thresholds)
                  if args.thresholds else interactions.InteractionThresholds())
    labeled = [(s, interactions.classify(s, thresholds)) for s in seqs]
    interactions.write_labels_csv(labeled, args.output)
    sys.stderr.write(f"wrote labels for {sum(s.num_agents for s in seqs)} agents "
                     f"in {len(seqs)} sequences to {args.output}\n")
    return 0


def cmd_toy(args) -> int:
    scenario = toylab.ToyScenario(
        kind=args.scenario, num_train_sequences=args.train_n,
        num_eval_sequences=args.eval_n, mode_gap=args.mode_gap,
        noise_std=args.noise_std, seed=args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.ablation:
        grid = {name: LossConfig(reduction="mean", joint_weight=args.omega, **preset)
                for name, preset in _LOSS_PRESETS.items()}
        rows = toylab.run_ablation(scenario, grid, steps=args.steps, lr=args.lr,
                                   num_samples=args.samples, radius_b=args.radius)
        path = out_dir / "ablation.csv"
        toylab.write_ablation_csv(rows, path)
        table = [(r.name, f"{r.final_loss:.6f}",
                  *(f"{r.metrics[m]:.4f}" for m in ("ade", "fde", "jade", "jfde", "cr_mean")))
                 for r in rows]
        sys.stdout.write(_format_table(
            table, ("config", "loss", "ade", "fde", "jade", "jfde", "cr_mean")))
        sys.stderr.write(f"wrote {path}\n")
        return 0
    cfg = LossConfig(reduction="mean", joint_weight=args.omega, **_LOSS_PRESETS[args.loss])
    _, trace = toylab.train_predictor(scenario, cfg, steps=args.steps, lr=args.lr,
                                      num_samples=args.samples, radius_b=args.radius,
                                      trace_every=args.trace_every)
    path = out_dir / f"trace_{args.loss}.csv"
    toylab.write_trace_csv(trace, path)
    final = trace[-1]
    sys.stdout.write(_format_table(
        [tuple(f"{final[f]:.6f}" for f in toylab.TRACE_FIELDS[1:])],
        toylab.TRACE_FIELDS[1:]))
    sys.stderr.write(f"wrote {path}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trajeval", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_window_args(p):
        p.add_argument("--gt", required=True, help="ground-truth scene directory")
        p.add_argument("--obs-len", type=int, default=8)
        p.add_argument("--pred-len", type=int, default=12)
        p.add_argument("--stride", type=int, default=1)
        p.add_argument("--fps", type=float, default=2.5)
        p.add_argument("--native-fps", type=float, default=None,
                       help="downsample from this rate to --fps before windowing")
        p.add_argument("--units", choices=trajdata.UNITS, default="meters")

    p = sub.add_parser("evaluate", help="evaluate a prediction dump against ground truth")
    add_window_args(p)
    p.add_argument("--pred", required=True, help="prediction dump file")
    p.add_argument("--samples", type=int, default=20, help="expected K (use 0 to accept any)")
    p.add_argument("--radius", type=float, default=0.1, help="agent radius b in scene units")
    p.add_argument("--metrics", default=",".join(metrics.METRIC_NAMES))
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.add_argument("--weighting", choices=("per_sequence", "per_agent"), default="per_sequence")
    p.add_argument("--strict", action="store_true",
                   help="fail if any sequence lacks predictions")
    p.add_argument("--squared", action="store_true",
                   help="use squared distances (the literal metric formulas)")
    p.add_argument("--per-sequence", action="store_true",
                   help="include per-sequence reports in JSON output")
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("gt-stats", help="density, collision rate, and interaction stats of the ground truth")
    add_window_args(p)
    p.add_argument("--radius", type=float, default=0.1)
    p.add_argument("--weighting", choices=("per_sequence", "per_agent"), default="per_sequence")
    p.add_argument("--thresholds", default=None, help="interaction thresholds key=value file")
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_gt_stats)

    p = sub.add_parser("categorize", help="write per-agent interaction labels as CSV")
    add_window_args(p)
    p.add_argument("--thresholds", default=None)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_categorize)

    p = sub.add_parser("toy", help="synthetic marginal-vs-joint optimization experiments")
    p.add_argument("--scenario", choices=toylab.SCENARIO_KINDS, default="two_mode_group")
    p.add_argument("--loss", choices=tuple(_LOSS_PRESETS), default="marginal")
    p.add_argument("--ablation", action="store_true", help="run the full loss-config grid")
    p.add_argument("--omega", type=float, default=1.0, help="joint term weight")
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--samples", type=int, default=2, help="number of prediction samples K")
    p.add_argument("--train-n", type=int, default=32)
    p.add_argument("--eval-n", type=int, default=32)
    p.add_argument("--mode-gap", type=float, default=2.0)
    p.add_argument("--noise-std", type=float, default=0.01)
    p.add_argument("--radius", type=float, default=0.1)
    p.add_argument("--trace-every", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="toy_out")
    p.set_defaults(func=cmd_toy)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "samples", None) == 0 and args.command == "evaluate":
        args.samples = None
    try:
        return args.func(args)
    except (TrajevalError, ValueError, FileNotFoundError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
