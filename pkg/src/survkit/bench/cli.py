"""Command-line interface.

Verbs::

    bench run <config.json>            full dataset comparison
    bench simulate <scenario.json>     one sweep scenario
    bench report <report.json>         re-emit an existing report

Config files are declarative JSON; see the README for the schemas.
Worker count comes from the SURVKIT_WORKERS environment variable.
Exit code is 0 only when no cell failed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from ..core import SurvKitError
from ..models import ModelSpec
from ..simulate import GeneratorSpec, ScenarioSpec, run_scenario
from .ingest import DatasetManifest
from .report import emit_report, report_json
from .runner import DEFAULT_MODELS, BenchConfig, run_benchmark


def _load_json(path):
    return json.loads(Path(path).read_text())


def _workers() -> int:
    return int(os.environ.get("SURVKIT_WORKERS", "1"))


def _parse_manifest_entry(entry, config_dir: Path):
    if isinstance(entry, str):
        path = Path(entry)
        if not path.is_absolute():
            path = config_dir / path
        return DatasetManifest.from_file(path)
    manifest = DatasetManifest(**{
        k: tuple(v) if isinstance(v, list) else v for k, v in entry.items()})
    if not Path(manifest.path).is_absolute():
        manifest.path = str(config_dir / manifest.path)
    return manifest


def cmd_run(args) -> int:
    doc = _load_json(args.config)
    config_dir = Path(args.config).resolve().parent
    manifests = [_parse_manifest_entry(e, config_dir)
                 for e in doc["datasets"]]
    bench_config = BenchConfig(
        n_splits=int(doc.get("n_splits", 25)),
        train_fraction=float(doc.get("train_fraction", 0.8)),
        metrics=tuple(doc.get("metrics", ["concordance", "ibs"])),
        search_budget=int(doc.get("search_budget", 25)),
        search_metric=doc.get("search_metric", "concordance"),
        search_folds=int(doc.get("search_folds", 5)),
        paper_compat=bool(doc.get("paper_compat", False)),
    )
    models = doc.get("models", list(DEFAULT_MODELS))
    report = run_benchmark(manifests, models, bench_config,
                           master_seed=int(doc.get("master_seed", 0)),
                           workers=_workers())
    out = Path(args.out)
    for fmt in args.format.split(","):
        emit_report(report, fmt.strip(), out)
    failed = report["n_failed"]
    print(f"wrote report to {out} ({failed} failed cells)")
    return 0 if failed == 0 else 1


def _parse_model_entry(entry) -> ModelSpec:
    if isinstance(entry, str):
        return ModelSpec(entry)
    return ModelSpec(entry["kind"], entry.get("config", {}),
                     entry.get("label"))


def cmd_simulate(args) -> int:
    doc = _load_json(args.config)
    generator = GeneratorSpec(**doc["generator"])
    sc = doc["scenario"]
    scenario = ScenarioSpec(
        axis=sc["axis"],
        grid=tuple(sc["grid"]),
        fixed=dict(sc.get("fixed", {})),
        replications=int(sc.get("replications", 100)),
        metrics=tuple(sc.get("metrics", ["concordance", "ibs"])),
        train_fraction=float(sc.get("train_fraction", 0.8)),
    )
    models = [_parse_model_entry(e) for e in doc["models"]]
    result = run_scenario(scenario, generator, models, workers=_workers())
    report = {
        "config": doc,
        "sweep": result.to_rows(),
        "failures": [{"grid_value": g, "replication": r, "model": m,
                      "error": e} for g, r, m, e in result.failures],
        "n_failed": len(result.failures),
    }
    out = Path(args.out)
    for fmt in args.format.split(","):
        emit_report(report, fmt.strip(), out, stem="scenario")
    print(f"wrote scenario report to {out} ({len(result.failures)} failures)")
    return 0 if not result.failures else 1


def cmd_report(args) -> int:
    report = _load_json(args.report)
    out = Path(args.out)
    files = emit_report(report, args.format, out)
    print("wrote " + ", ".join(str(f) for f in files))
    return 0 if report.get("n_failed", 0) == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bench",
        description="time-to-event model comparison and simulation")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="run the dataset comparison")
    p_run.add_argument("config", help="JSON benchmark config")
    p_run.add_argument("--out", default="bench_out")
    p_run.add_argument("--format", default="json,csv")
    p_run.set_defaults(func=cmd_run)

    p_sim = sub.add_parser("simulate", help="run a sweep scenario")
    p_sim.add_argument("config", help="JSON scenario config")
    p_sim.add_argument("--out", default="bench_out")
    p_sim.add_argument("--format", default="json,csv")
    p_sim.set_defaults(func=cmd_simulate)

    p_rep = sub.add_parser("report", help="re-emit an existing report")
    p_rep.add_argument("report", help="JSON report file")
    p_rep.add_argument("--format", default="csv")
    p_rep.add_argument("--out", default="bench_out")
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SurvKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
