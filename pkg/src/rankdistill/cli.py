"""Command-line interface.

Subcommands mirror the experiment stages: ``gen-data``, ``train-teacher``,
``snapshot``, ``distill``, ``evaluate``, ``run``, ``sweep``. Every
ExperimentConfig field is reachable as a kebab-case flag
(``--teacher-epochs``, ``--listwise-hot-size``, ...); ``--config`` loads a
JSON file with the same field names and flags override file values. Exits
nonzero on any training or convergence error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, fields
from pathlib import Path

from .errors import ArgumentError, RankDistillError
from .harness import (
    ExperimentConfig,
    _SECTIONS,
    config_from_dict,
    config_to_dict,
    distill_student,
    record_to_dict,
    run_experiment,
    run_sweep,
    snapshot_teacher,
    train_teacher,
    write_run_outputs,
)
from .metrics import evaluate
from .model import load_model, save_model
from .synthdata import generate, hidden_positive_rate, load_dataset, save_dataset

_SCALAR_FIELDS = ("scheme", "alpha_rank", "student_init", "seed", "eval_k")


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _parse_int_tuple(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _flag_type(annotation: str):
    if "bool" in annotation:
        return _parse_bool
    if "tuple" in annotation:
        return _parse_int_tuple
    if "int" in annotation:
        return int
    if "float" in annotation:
        return float
    return str


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON config file")
    for name in _SCALAR_FIELDS:
        ann = next(f for f in fields(ExperimentConfig) if f.name == name).type
        parser.add_argument(
            f"--{name.replace('_', '-')}", dest=f"cfg::{name}", type=_flag_type(str(ann))
        )
    for section, cls in _SECTIONS.items():
        for f in cls.__dataclass_fields__.values():
            flag = f"--{section}-{f.name.replace('_', '-')}"
            parser.add_argument(
                flag, dest=f"cfg::{section}.{f.name}", type=_flag_type(str(f.type))
            )


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    doc: dict = {}
    if args.config is not None:
        doc = json.loads(Path(args.config).read_text())
    for key, value in vars(args).items():
        if not key.startswith("cfg::") or value is None:
            continue
        path = key.split("::", 1)[1]
        if "." in path:
            section, name = path.split(".", 1)
            doc.setdefault(section, {})[name] = value
        else:
            doc[path] = value
    return config_from_dict(doc)


def _cmd_gen_data(args) -> int:
    config = _config_from_args(args)
    splits = generate(config.task)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for ds in splits:
        save_dataset(ds, out / f"{ds.split}.jsonl")
    print(
        json.dumps(
            {
                "out": str(out),
                "sizes": {ds.split: len(ds) for ds in splits},
                "train_hidden_positive_rate": hidden_positive_rate(splits[0]),
            }
        )
    )
    return 0


def _cmd_train_teacher(args) -> int:
    config = _config_from_args(args)
    teacher, record = train_teacher(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_model(teacher, out / "teacher.json")
    (out / "teacher-run.json").write_text(json.dumps(record_to_dict(record), indent=2))
    print(json.dumps({"teacher": str(out / "teacher.json"), "best_epoch": record.teacher.best_epoch}))
    return 0


def _cmd_snapshot(args) -> int:
    config = _config_from_args(args)
    teacher = load_model(args.teacher)
    train = generate(config.task)[0]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    snapshot = snapshot_teacher(teacher, train, config, cache_path=out / "snapshot.npz")
    print(
        json.dumps(
            {
                "snapshot": str(out / "snapshot.npz"),
                "instances": len(snapshot.rankings),
                "has_margins": snapshot.margins is not None,
                "sinkhorn_fallbacks": snapshot.sinkhorn_fallbacks,
            }
        )
    )
    return 0


def _cmd_distill(args) -> int:
    config = _config_from_args(args)
    teacher = load_model(args.teacher)
    data = generate(config.task)
    cache = Path(args.snapshot) if args.snapshot else None
    snapshot = snapshot_teacher(teacher, data[0], config, cache_path=cache)
    student, record = distill_student(snapshot, config, data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_model(student, out / "student.json")
    write_run_outputs(out, config, record)
    print(json.dumps({"student": str(out / "student.json"), "test": asdict(record.test_result)}))
    return 0


def _cmd_evaluate(args) -> int:
    model = load_model(args.model)
    if args.data is not None:
        dataset = load_dataset(args.data)
    else:
        config = _config_from_args(args)
        splits = {ds.split: ds for ds in generate(config.task)}
        dataset = splits[args.split]
    k = args.k if args.k is not None else 5
    result = evaluate(model, dataset, k)
    print(json.dumps(asdict(result)))
    return 0


def _cmd_run(args) -> int:
    config = _config_from_args(args)
    record = run_experiment(config, outdir=args.out)
    summary = {
        "out": str(args.out) if args.out else None,
        "config_checksum": record.config_checksum,
        "test_result": asdict(record.test_result) if record.test_result else None,
        "hidden_recovery": record.hidden_recovery,
    }
    print(json.dumps(summary))
    return 0


def _cmd_sweep(args) -> int:
    config = _config_from_args(args)
    values = json.loads(args.values)
    if not isinstance(values, list):
        raise ArgumentError("--values must be a JSON list")
    cells = run_sweep(config, args.axis, values, outdir=args.out)
    failed = [c for c in cells if c.error is not None]
    print(
        json.dumps(
            {
                "axis": args.axis,
                "cells": len(cells),
                "failed": len(failed),
                "errors": [c.error for c in failed],
            }
        )
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rankdistill",
        description="Ranking-distillation experiments on synthetic insufficient-label tasks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write train/val/test JSONL datasets")
    _add_config_flags(p)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(fn=_cmd_gen_data)

    p = sub.add_parser("train-teacher", help="stage one: teacher on revealed labels")
    _add_config_flags(p)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(fn=_cmd_train_teacher)

    p = sub.add_parser("snapshot", help="freeze teacher rankings and margins")
    _add_config_flags(p)
    p.add_argument("--teacher", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(fn=_cmd_snapshot)

    p = sub.add_parser("distill", help="stage two: train the student")
    _add_config_flags(p)
    p.add_argument("--teacher", required=True, type=Path)
    p.add_argument("--snapshot", type=Path, help="snapshot cache (.npz) to reuse")
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(fn=_cmd_distill)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint")
    _add_config_flags(p)
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--data", type=Path, help="dataset JSONL (overrides --split)")
    p.add_argument("--split", default="test", choices=("train", "val", "test"))
    p.add_argument("--k", type=int)
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("run", help="full two-stage experiment")
    _add_config_flags(p)
    p.add_argument("--out", type=Path)
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("sweep", help="run one experiment per axis value")
    _add_config_flags(p)
    p.add_argument("--axis", required=True, help="config field path, e.g. alpha_rank")
    p.add_argument("--values", required=True, help="JSON list of axis values")
    p.add_argument("--out", type=Path)
    p.set_defaults(fn=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except RankDistillError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
