"""``ensemble-ids`` command line."""
from __future__ import annotations

import argparse
import json
import logging
import shutil
import sys
from pathlib import Path

from .dataset import BinaryClass, ConnectionRecord, parse_file, stratified_split
from .ensemble import DeciderLogic, render_report
from .feedback import EmptyQueueError, FeedbackQueue, retrain
from .harness import (
    ExperimentConfig,
    ExperimentData,
    evaluate,
    load_config,
    render_subsystem_table,
    run_experiment,
    sweep,
)
from .pipeline import train_ensemble

log = logging.getLogger("ensemble_ids")


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def cmd_init_config(args) -> int:
    cfg = ExperimentConfig()
    Path(args.path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
    print(f"wrote {args.path}")
    return 0


def _config(args, **overrides) -> ExperimentConfig:
    return load_config(args.config, data_dir=getattr(args, "data_dir", None), **overrides)


def cmd_train(args) -> int:
    cfg = _config(args)
    seed = cfg.base_seed if args.seed is None else args.seed
    data = ExperimentData.load(cfg)
    train, valid = stratified_split(data.train, cfg.valid_fraction, seed)
    ens = train_ensemble(train, valid, seed, cfg.models, cfg.learners,
                         concurrent=cfg.concurrent and not args.sequential)
    ens.save(args.out)
    for name in ens.learners:
        print(f"{name}: trained in {ens.train_stats[name]['wall_time']:.2f}s")
    print(f"total: {ens.train_stats['total_wall_time']:.2f}s -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    reports = evaluate(args.models, args.data, args.logic)
    for name, rep in reports.items():
        print(render_report(rep, f"[{name}] {Path(args.data).name}"))
        print()
    if args.out:
        Path(args.out).write_text(json.dumps({k: r.to_dict() for k, r in reports.items()}, indent=2))
    return 0


def cmd_experiment(args) -> int:
    cfg = _config(args, repetitions=args.repetitions)
    if args.sequential:
        cfg.concurrent = False
    out = Path(args.out or cfg.output_dir)
    report = run_experiment(cfg, output_dir=out, save_models=args.save_models)
    print(render_subsystem_table(report))
    print(f"report written to {out}")
    return 1 if report.failed else 0


def cmd_sweep(args) -> int:
    cfg = _config(args, repetitions=args.repetitions)
    values = [_parse_value(v) for v in args.values.split(",") if v.strip()]
    out = Path(args.out or cfg.output_dir) / f"sweep-{args.param}"
    reports = sweep(cfg, args.param, values, output_dir=out)
    print((out / "table.txt").read_text())
    return 1 if any(r.failed for r in reports) else 0


def _record_from_args(args) -> ConnectionRecord:
    if args.record:
        return ConnectionRecord.from_fields(args.record.strip().split(","))
    ds = parse_file(args.from_file)
    return ds[args.line - 1]


def cmd_feedback_add(args) -> int:
    rec = _record_from_args(args)
    q = FeedbackQueue(args.queue)
    added = q.report_misclassification(rec, BinaryClass[args.truth.upper()])
    print(f"{'queued' if added else 'already queued'}; {len(q)} pending")
    return 0


def cmd_feedback_retrain(args) -> int:
    cfg = _config(args)
    q = FeedbackQueue(args.queue)
    base = ExperimentData.load(cfg).train
    target = Path(args.models)
    seed = args.seed
    if seed is None:
        manifest = target / "manifest.json"
        # fresh seed for every generation of models
        seed = json.loads(manifest.read_text())["seed"] + 1 if manifest.exists() else cfg.base_seed
    ens = retrain(q, base, cfg.models, seed=seed, valid_fraction=cfg.valid_fraction,
                  duplication=args.duplication, concurrent=cfg.concurrent)
    # write to a sibling directory first so the served models are replaced in one rename
    staging = target.with_name(target.name + ".new")
    ens.save(staging)
    if target.exists():
        backup = target.with_name(target.name + ".old")
        if backup.exists():
            shutil.rmtree(backup)
        target.rename(backup)
    staging.rename(target)
    print(f"retrained on {len(base)} + {args.duplication} x reported records -> {target}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ensemble-ids", description=__doc__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("init-config", help="write a config file with the default hyperparameters")
    s.add_argument("path")
    s.set_defaults(func=cmd_init_config)

    def common(s):
        s.add_argument("--config", help="JSON experiment config")
        s.add_argument("--data-dir", help="directory holding the NSL-KDD files")

    s = sub.add_parser("train", help="train the ensemble once and save it")
    common(s)
    s.add_argument("--out", required=True, help="model directory")
    s.add_argument("--seed", type=int)
    s.add_argument("--sequential", action="store_true", help="train learners one after another")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("evaluate", help="score a saved ensemble on an NSL-KDD file")
    s.add_argument("--models", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--logic", choices=[x.value for x in DeciderLogic], default="or")
    s.add_argument("--out", help="write metrics JSON here")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("experiment", help="seeded repetitions with mean/std aggregation")
    common(s)
    s.add_argument("--repetitions", type=int)
    s.add_argument("--out")
    s.add_argument("--sequential", action="store_true")
    s.add_argument("--save-models", action="store_true")
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("sweep", help="one experiment per hyperparameter value")
    common(s)
    s.add_argument("--param", required=True)
    s.add_argument("--values", required=True, help="comma-separated values")
    s.add_argument("--repetitions", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    fb = sub.add_parser("feedback", help="misclassification reports and retraining")
    fsub = fb.add_subparsers(dest="feedback_command", required=True)
    s = fsub.add_parser("add", help="queue a misclassified record")
    s.add_argument("--queue", required=True, help="append-only queue file")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--record", help="the record as one NSL-KDD line")
    g.add_argument("--from-file", help="NSL-KDD file to take the record from")
    s.add_argument("--line", type=int, default=1, help="1-based line number for --from-file")
    s.add_argument("--truth", choices=["attack", "normal"], required=True)
    s.set_defaults(func=cmd_feedback_add)
    s = fsub.add_parser("retrain", help="retrain all learners on train + queued records")
    common(s)
    s.add_argument("--queue", required=True)
    s.add_argument("--models", required=True, help="model directory to replace")
    s.add_argument("--duplication", type=int, default=1)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_feedback_retrain)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        return args.func(args)
    except (FileNotFoundError, ValueError, EmptyQueueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
