"""Command-line pipeline: pretrain -> search -> evaluate -> report.

Each command reads one JSON config (all keys optional), writes its
artifacts into an output directory together with a manifest, and exits
nonzero on any error.  Result files (checkpoint, CSVs) are byte-stable
for a fixed config and seed; manifests carry timestamps and are not.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .data import TaskSpec, make_dataset
from .nsga import SearchResult, evolve
from .sim import NO_NOISE, NoiseSpec
from .space import (SearchSpaceDef, cost_of, format_genome, parse_genome,
                    validate_genome)
from .training import (SharedParameters, evaluate_with_head, fine_tune,
                       load_checkpoint, pretrain, save_checkpoint, write_train_log)

ARCHIVE_COLUMNS = ["genome", "E", "C", "n_cnot", "n_depth", "val_accuracy"]
STATS_COLUMNS = ["generation", "best_E", "mean_E", "archive_size"]

# Published results under comparable noisy conditions, kept as fixed
# reference rows for the report table.
REFERENCE_ROWS = {
    "binary": ("QuantumNAS (evolutionary search)", 4, 0.96, "9 (CU)", "-"),
    "iris": ("Enhanced-QAS (random search)", 4, 0.97, "4 (CZ)", "-"),
}


class CliError(RuntimeError):
    pass


def _resolve_out(args, config: RunConfig) -> Path:
    if args.out:
        base = Path(args.out)
    elif config.out_dir:
        base = Path(config.out_dir)
    else:
        base = Path(os.environ.get("NAQAS_OUT", ".")) / "naqas-run"
    base.mkdir(parents=True, exist_ok=True)
    return base


def _apply_overrides(config: RunConfig, args) -> RunConfig:
    if getattr(args, "seed", None) is not None:
        config = dataclasses.replace(config, seed=args.seed)
    if getattr(args, "workers", None) is not None:
        config = dataclasses.replace(config, workers=args.workers)
    if getattr(args, "noiseless", False):
        config = dataclasses.replace(config, noise=NO_NOISE)
    return config


def _space_of(task: TaskSpec) -> SearchSpaceDef:
    return SearchSpaceDef(task.n_qubits, task.min_layers, task.max_layers)


def _write_manifest(out_dir: Path, command: str, config: RunConfig, artifacts: dict,
                    extra: dict | None = None):
    manifest = {
        "command": command,
        "version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "seed": config.seed,
        "config": config.to_dict(),
        "artifacts": {k: str(v) for k, v in artifacts.items()},
    }
    if extra:
        manifest.update(extra)
    path = out_dir / f"manifest_{command}.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path


def _check_checkpoint(params: SharedParameters, task: TaskSpec, path):
    have = (params.n_qubits, params.n_heads, params.max_layers, params.n_classes)
    want = (task.n_qubits, task.n_heads, task.max_layers, task.n_classes)
    if have != want:
        raise CliError(
            f"checkpoint {path} has shape (qubits, heads, max_layers, classes)={have} "
            f"but task '{task.name}' needs {want}")


def _rng(seed: int, label: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, label]))


def cmd_pretrain(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    out_dir = _resolve_out(args, config)
    task = config.task
    dataset = make_dataset(task, config.seed)
    space = _space_of(task)
    params, log = pretrain(space, dataset, task, config.noise, config.trainer,
                           _rng(config.seed, 1))
    ckpt = out_dir / "checkpoint.json"
    log_csv = out_dir / "train_log.csv"
    save_checkpoint(ckpt, params)
    write_train_log(log_csv, log)
    _write_manifest(out_dir, "pretrain", config,
                    {"checkpoint": ckpt, "train_log": log_csv})
    print(f"pretrained {config.trainer.epochs} epochs on '{task.name}' "
          f"-> {ckpt}")
    return 0


def write_archive_csv(path, result: SearchResult):
    rows = sorted(result.archive.members,
                  key=lambda m: (m.fitness[0], m.fitness[1], m.genome))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ARCHIVE_COLUMNS)
        for m in rows:
            writer.writerow([format_genome(m.genome), repr(m.fitness[0]),
                             repr(m.fitness[1]), m.metrics["n_cnot"],
                             m.metrics["n_depth"], repr(m.metrics["val_accuracy"])])


def write_stats_csv(path, result: SearchResult):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(STATS_COLUMNS)
        for s in result.stats:
            writer.writerow([s.generation, repr(s.best_e), repr(s.mean_e), s.archive_size])


def cmd_search(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    out_dir = _resolve_out(args, config)
    task = config.task
    params = load_checkpoint(args.checkpoint)
    _check_checkpoint(params, task, args.checkpoint)
    dataset = make_dataset(task, config.seed)
    space = _space_of(task)
    result = evolve(dataset, task, space, params, config.noise, config.evo,
                    _rng(config.seed, 2), fine_tune_steps=config.trainer.fine_tune_steps,
                    alpha=config.alpha, beta=config.beta, workers=config.workers,
                    head_refit_steps=config.trainer.head_refit_steps)
    archive_csv = out_dir / "archive.csv"
    stats_csv = out_dir / "generation_stats.csv"
    write_archive_csv(archive_csv, result)
    write_stats_csv(stats_csv, result)
    _write_manifest(out_dir, "search", config,
                    {"archive": archive_csv, "stats": stats_csv,
                     "checkpoint": Path(args.checkpoint).resolve()},
                    extra={"evaluations": result.evaluations})
    print(f"search finished: {len(result.archive)} non-dominated architectures, "
          f"{result.evaluations} evaluations -> {archive_csv}")
    return 0


def evaluate_genome(genome, config: RunConfig, params: SharedParameters,
                    noise: NoiseSpec) -> dict:
    """Fine-tune a genome and measure it on the held-out test split."""
    task = config.task
    space = _space_of(task)
    validate_genome(genome, space)
    dataset = make_dataset(task, config.seed)
    tuned = fine_tune(genome, params, dataset, task, noise,
                      config.trainer.fine_tune_steps, space=space,
                      head_refit_steps=config.trainer.head_refit_steps)
    test_loss, test_acc = evaluate_with_head(genome, tuned.params, tuned.head,
                                             dataset.split("test"), noise, space)
    metrics = cost_of(genome, space, config.alpha, config.beta)
    return {
        "E": tuned.val_loss,
        "val_accuracy": tuned.val_accuracy,
        "test_loss": test_loss,
        "test_accuracy": test_acc,
        "head": tuned.head,
        "n_cnot": metrics.n_cnot,
        "n_depth": metrics.n_depth,
        "cost": metrics.cost,
    }


def cmd_evaluate(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    out_dir = _resolve_out(args, config)
    genome = parse_genome(args.genome)
    params = load_checkpoint(args.checkpoint)
    _check_checkpoint(params, config.task, args.checkpoint)
    record = {
        "genome": format_genome(genome),
        "task": config.task.name,
        "noisy": evaluate_genome(genome, config, params, config.noise),
        "noiseless": evaluate_genome(genome, config, params, NO_NOISE),
    }
    path = out_dir / "evaluation.json"
    with open(path, "w") as fh:
        json.dump(record, fh, indent=1, sort_keys=True)
        fh.write("\n")
    _write_manifest(out_dir, "evaluate", config, {"evaluation": path})
    print(json.dumps(record, indent=1, sort_keys=True))
    return 0


def _read_archive_rows(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ARCHIVE_COLUMNS:
            raise CliError(f"{path}: expected columns {ARCHIVE_COLUMNS}, "
                           f"found {reader.fieldnames}")
        rows = []
        for r in reader:
            rows.append({"genome": parse_genome(r["genome"]),
                         "E": float(r["E"]), "C": float(r["C"]),
                         "n_cnot": int(r["n_cnot"]), "n_depth": int(r["n_depth"]),
                         "val_accuracy": float(r["val_accuracy"])})
    return rows


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    expected = {"archive": run_dir / "archive.csv",
                "manifest": run_dir / "manifest_search.json"}
    missing = [str(p) for p in expected.values() if not p.exists()]
    if missing:
        raise CliError(f"run directory {run_dir} is incomplete; expected "
                       f"{[str(p) for p in expected.values()]}, missing {missing}")
    rows = _read_archive_rows(expected["archive"])
    with open(expected["manifest"]) as fh:
        manifest = json.load(fh)
    from .config import config_from_dict
    config = config_from_dict(manifest["config"])
    task = config.task

    top_csv = run_dir / "top_accuracy.csv"
    ranked = sorted(rows, key=lambda r: (-r["val_accuracy"], r["E"], r["genome"]))
    if args.top is not None:
        ranked = ranked[:args.top]
    with open(top_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "genome", "val_accuracy", "E", "C", "n_cnot", "n_depth"])
        for i, r in enumerate(ranked, start=1):
            writer.writerow([i, format_genome(r["genome"]), repr(r["val_accuracy"]),
                             repr(r["E"]), repr(r["C"]), r["n_cnot"], r["n_depth"]])

    depth_csv = run_dir / "accuracy_by_depth.csv"
    in_range = [r for r in rows if task.min_layers <= r["n_depth"] <= task.max_layers]
    with open(depth_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n_depth", "val_accuracy", "genome"])
        for r in sorted(in_range, key=lambda r: (r["n_depth"], -r["val_accuracy"], r["genome"])):
            writer.writerow([r["n_depth"], repr(r["val_accuracy"]), format_genome(r["genome"])])

    print(f"archive: {len(rows)} architectures; wrote {top_csv} and {depth_csv}")
    if not rows:
        print("archive is empty; nothing to summarize")
        return 0

    best = min(rows, key=lambda r: (r["E"], r["C"], r["genome"]))
    ckpt_path = manifest["artifacts"].get("checkpoint")
    if not ckpt_path or not Path(ckpt_path).exists():
        raise CliError(f"run directory {run_dir}: checkpoint {ckpt_path!r} not found")
    params = load_checkpoint(ckpt_path)
    record = evaluate_genome(best["genome"], config, params, config.noise)
    print()
    print(f"best architecture by task objective (genome {format_genome(best['genome'])}):")
    header = f"{'method':44s} {'qubits':>6s} {'accuracy':>9s} {'two-qubit gates':>16s} {'depth':>6s}"
    print(header)
    print("-" * len(header))
    print(f"{'this run (noise-aware evolutionary search)':44s} {task.n_qubits:>6d} "
          f"{record['test_accuracy']:>9.4g} {str(record['n_cnot']) + ' (CNOT)':>16s} "
          f"{record['n_depth']:>6d}")
    ref = REFERENCE_ROWS.get(task.name)
    if ref:
        name, q, acc, gates, depth = ref
        print(f"{'reference: ' + name:44s} {q:>6d} {acc:>9.4g} {gates:>16s} {depth:>6s}")
    print()
    print(f"E={record['E']!r} val_accuracy={record['val_accuracy']!r} "
          f"test_accuracy={record['test_accuracy']!r} "
          f"n_cnot={record['n_cnot']} n_depth={record['n_depth']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="naqas",
        description="Noise-aware quantum architecture search pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, checkpoint=False):
        p.add_argument("--config", required=True, help="path to the JSON run config")
        if checkpoint:
            p.add_argument("--checkpoint", required=True,
                           help="shared-parameter checkpoint from 'pretrain'")
        p.add_argument("--out", help="output directory (default: $NAQAS_OUT/naqas-run)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--workers", type=int, help="parallel evaluation workers")
        p.add_argument("--noiseless", action="store_true",
                       help="force the noise channel off")

    p = sub.add_parser("pretrain", help="train the shared parameter pool")
    common(p)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("search", help="run the evolutionary architecture search")
    common(p, checkpoint=True)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("evaluate", help="fine-tune and test one architecture")
    p.add_argument("genome", help="comma-separated gene list, e.g. '12,88,5,190,7'")
    common(p, checkpoint=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="summarize a finished search run")
    p.add_argument("run_dir", help="directory holding archive.csv and manifests")
    p.add_argument("--top", type=int, help="limit the accuracy table to N rows")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
