"""Command-line interface: ``synth``, ``featurize``, ``run``, ``report``.

Exit codes: 0 success, 1 validation or usage error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import datetime as dt
import hashlib
import json
import platform
import sys
import warnings
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from .data import generate_synthetic_cohort, load_dataset, write_dataset
from .exceptions import ValidationError
from .features import FeatureConfig, build_day_table, matrix_from_table, read_feature_csv, write_feature_csv
from .forest import forest_to_json
from .metrics import render_report
from .neuralnet import network_to_json, write_loss_trace
from .pipeline import MODES, SPLIT_BY, HybridReport, PipelineConfig, load_config, run_hybrid_pipeline

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def hash_tree(root) -> dict:
    """sha256 of every file below ``root``, keyed by posix relative path."""
    root = Path(root)
    return {p.relative_to(root).as_posix(): sha256_file(p)
            for p in sorted(root.rglob("*")) if p.is_file()}


def _environment() -> dict:
    return {"actihybrid": __version__, "python": platform.python_version(), "numpy": np.__version__}


def _now() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")


def _write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------


def cmd_synth(args) -> int:
    ds = generate_synthetic_cohort(args.condition, args.control, args.days, args.seed)
    out = Path(args.out)
    written = write_dataset(ds, out)
    manifest = {
        "command": "synth",
        "synthesis": {"n_condition": args.condition, "n_control": args.control,
                      "days_per_participant": args.days, "seed": args.seed},
        "seeds": {"synth": args.seed},
        "artifacts": {p.relative_to(out).as_posix(): sha256_file(p) for p in written},
        "environment": _environment(),
        "created_at": _now(),
    }
    _write_json(out / "manifest.json", manifest)
    print(f"wrote {len(written) - 1} participant files and scores.csv to {out}")
    return EXIT_OK


def cmd_featurize(args) -> int:
    cfg = FeatureConfig(min_records=args.min_records, use_zero_proportion=args.zero_proportion)
    if cfg.min_records < 1:
        raise ValidationError("--min-records must be >= 1")
    ds = load_dataset(args.data)
    table = build_day_table(ds, cfg)
    write_feature_csv(table, args.out)
    if not table:
        print(f"warning: no day has >= {cfg.min_records} records; wrote header only to {args.out}",
              file=sys.stderr)
    else:
        print(f"wrote {len(table)} rows to {args.out}")
    return EXIT_OK


_RUN_FLAGS = {
    # flag dest -> PipelineConfig field
    "mode": "mode", "seed": "seed", "random_state": "random_state",
    "n_estimators": "n_estimators", "max_depth": "max_depth",
    "min_samples_split": "min_samples_split", "min_samples_leaf": "min_samples_leaf",
    "max_features": "max_features", "learning_rate": "learning_rate", "epochs": "epochs",
    "batch_size": "batch_size", "threshold": "threshold", "test_fraction": "test_fraction",
    "stratified": "stratified", "split_by": "split_by", "min_records": "min_records",
    "zero_proportion": "use_zero_proportion", "shuffle": "shuffle",
}


def resolve_config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    overrides = {field: getattr(args, dest) for dest, field in _RUN_FLAGS.items()
                 if getattr(args, dest, None) is not None}
    if "max_depth" in overrides and overrides["max_depth"] < 0:
        overrides["max_depth"] = None
    return replace(cfg, **overrides)


def cmd_run(args) -> int:
    if bool(args.data) == bool(args.features):
        raise UsageError("give exactly one of --data DIR or --features CSV")
    cfg = resolve_config(args)
    fcfg = FeatureConfig(cfg.min_records, cfg.use_zero_proportion)
    if args.data:
        matrix = matrix_from_table(build_day_table(load_dataset(args.data), fcfg), fcfg)
        inputs = {"data": str(args.data), "hashes": hash_tree(args.data)}
    else:
        matrix = read_feature_csv(args.features, fcfg)
        inputs = {"features": str(args.features), "hashes": {Path(args.features).name: sha256_file(args.features)}}

    report = run_hybrid_pipeline(matrix, cfg, n_jobs=args.jobs)
    report_json = report.to_json()

    reproducible = {
        "command": "run",
        "config": asdict(cfg),
        "inputs": inputs,
        "seeds": {"split": cfg.seed, "network": cfg.seed, "meta_split": cfg.seed, "forests": cfg.random_state},
    }
    run_id = hashlib.sha256(json.dumps(reproducible, sort_keys=True).encode()).hexdigest()[:16]
    run_dir = Path(args.out) / f"run-{run_id}"
    (run_dir / "models").mkdir(parents=True, exist_ok=True)

    (run_dir / "report.json").write_text(report_json, encoding="utf-8")
    (run_dir / "report.txt").write_text(render_hybrid(report) + "\n", encoding="utf-8")
    art = report.artifacts
    (run_dir / "models" / "forest.json").write_text(forest_to_json(art.forest), encoding="utf-8")
    (run_dir / "models" / "meta_forest.json").write_text(forest_to_json(art.meta_forest), encoding="utf-8")
    (run_dir / "models" / "network.json").write_text(network_to_json(art.network), encoding="utf-8")
    _write_json(run_dir / "models" / "scaler.json", art.scaler.to_dict())
    write_loss_trace(art.loss_trace, run_dir / "loss_trace.csv")

    manifest = dict(reproducible)
    manifest["run_id"] = run_id
    manifest["artifacts"] = {k: v for k, v in hash_tree(run_dir).items() if k != "manifest.json"}
    manifest["environment"] = _environment()
    manifest["created_at"] = _now()
    _write_json(run_dir / "manifest.json", manifest)

    print(render_hybrid(report))
    print(f"\nrun directory: {run_dir}")
    return EXIT_OK


def render_hybrid(report: HybridReport) -> str:
    parts = [f"mode: {report.mode}   evaluated rows: {report.split.get('n_eval')}"]
    for title, r in (("Random Forest", report.rf_report), ("Neural Network", report.nn_report),
                     ("Hybrid RF-NN", report.hybrid_report)):
        parts.append(render_report(r, title=f"== {title} =="))
    return "\n\n".join(parts)


def cmd_report(args) -> int:
    report = HybridReport.from_json(Path(args.report).read_text(encoding="utf-8"))
    print(render_hybrid(report))
    return EXIT_OK


# ---------------------------------------------------------------------------


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {s}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="actihybrid", description="Hybrid random forest / neural network depression classifier")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="write a synthetic two-cohort dataset")
    s.add_argument("--condition", type=_positive_int, default=5)
    s.add_argument("--control", type=_positive_int, default=5)
    s.add_argument("--days", type=_positive_int, default=14)
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    f = sub.add_parser("featurize", help="write the per-day feature CSV for a dataset directory")
    f.add_argument("--data", required=True)
    f.add_argument("--out", required=True)
    f.add_argument("--min-records", type=int, default=60)
    f.add_argument("--zero-proportion", action="store_true")
    f.set_defaults(func=cmd_featurize)

    r = sub.add_parser("run", help="run the hybrid pipeline and write a report")
    src = r.add_argument_group("input")
    src.add_argument("--data", help="dataset directory (condition/, control/, scores.csv)")
    src.add_argument("--features", help="feature CSV written by 'featurize'")
    r.add_argument("--config", help="key = value config file; flags override it")
    r.add_argument("--out", default="runs", help="parent directory for run outputs")
    r.add_argument("--jobs", type=_positive_int, default=1, help="threads for forest training")
    r.add_argument("--mode", choices=MODES)
    r.add_argument("--seed", type=int, help="seed for the split, network and meta split")
    r.add_argument("--random-state", type=int, help="forest seed")
    r.add_argument("--n-estimators", type=_positive_int)
    r.add_argument("--max-depth", type=int, help="negative for unlimited")
    r.add_argument("--min-samples-split", type=int)
    r.add_argument("--min-samples-leaf", type=int)
    r.add_argument("--max-features", choices=("sqrt", "log2"))
    r.add_argument("--learning-rate", type=float)
    r.add_argument("--epochs", type=_positive_int)
    r.add_argument("--batch-size", type=_positive_int)
    r.add_argument("--threshold", type=float)
    r.add_argument("--test-fraction", type=float)
    r.add_argument("--stratified", action="store_const", const=True)
    r.add_argument("--split-by", choices=SPLIT_BY)
    r.add_argument("--min-records", type=int)
    r.add_argument("--zero-proportion", action="store_const", const=True)
    r.add_argument("--no-shuffle", dest="shuffle", action="store_const", const=False)
    r.set_defaults(func=cmd_run)

    rep = sub.add_parser("report", help="pretty-print a report.json")
    rep.add_argument("report")
    rep.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = _show_warning
            return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
