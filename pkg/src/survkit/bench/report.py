"""Report emitters: nested JSON, flat CSV, and per-figure plot data."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from ..core import SurvKitError


class IoFailure(SurvKitError):
    """Could not write a report file."""


def _write_text(path: Path, text: str):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def emit_report(report: dict, fmt: str, out_dir, stem: str = "report"):
    """Write one format; returns the list of files written.

    json     the full nested report, byte-stable for a given report
    csv      flat (dataset, model, split, metric, value) rows plus
             aggregate rows
    plotdata long-format tables, one file per figure family (box plots
             per dataset/metric, or sweep curves)
    """
    out_dir = Path(out_dir)
    written = []
    if fmt == "json":
        path = out_dir / f"{stem}.json"
        _write_text(path, report_json(report))
        written.append(path)
    elif fmt == "csv":
        path = out_dir / f"{stem}.csv"
        _write_csv(report, path)
        written.append(path)
    elif fmt == "plotdata":
        written.extend(_write_plotdata(report, out_dir, stem))
    else:
        raise SurvKitError(f"unknown report format {fmt!r}")
    return written


def _write_csv(report: dict, path: Path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["row_type", "dataset", "model", "split",
                             "metric", "value", "sd", "n"])
            if "cells" in report:
                for c in report["cells"]:
                    if c["status"] != "ok":
                        writer.writerow(["failed", c["dataset"], c["model"],
                                         c["split"], "", "", "", ""])
                    else:
                        writer.writerow(["cell", c["dataset"], c["model"],
                                         c["split"], c["metric"],
                                         repr(c["value"]), "", ""])
                agg = report["aggregates"]["per_dataset"]
                for ds in sorted(agg):
                    for model in sorted(agg[ds]):
                        for metric in sorted(agg[ds][model]):
                            cell = agg[ds][model][metric]
                            writer.writerow(
                                ["aggregate", ds, model, "", metric,
                                 repr(cell["mean"]), repr(cell["sd"]),
                                 cell["n"]])
            if "sweep" in report:
                for row in report["sweep"]:
                    writer.writerow(
                        ["sweep", row["axis"], row["model"],
                         row["grid_value"], row["metric"],
                         repr(row["mean"]), repr(row["sd"]),
                         row["replications"]])
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc


def _write_plotdata(report: dict, out_dir: Path, stem: str):
    written = []
    if "cells" in report:
        # one long-format box-plot table per metric
        metrics = sorted({c.get("metric") for c in report["cells"]
                          if c["status"] == "ok"})
        for metric in metrics:
            path = out_dir / f"{stem}_box_{metric}.csv"
            try:
                path.parent.mkdir(parents=True, exist_ok=True)
                with open(path, "w", newline="") as fh:
                    writer = csv.writer(fh)
                    writer.writerow(["dataset", "model", "split", "value"])
                    for c in report["cells"]:
                        if c["status"] == "ok" and c["metric"] == metric:
                            writer.writerow([c["dataset"], c["model"],
                                             c["split"], repr(c["value"])])
            except OSError as exc:
                raise IoFailure(f"{path}: {exc}") from exc
            written.append(path)
    if "sweep" in report:
        path = out_dir / f"{stem}_sweep.csv"
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["axis", "grid_value", "model", "metric",
                                 "mean", "sd", "replications"])
                for row in report["sweep"]:
                    writer.writerow([row["axis"], row["grid_value"],
                                     row["model"], row["metric"],
                                     repr(row["mean"]), repr(row["sd"]),
                                     row["replications"]])
        except OSError as exc:
            raise IoFailure(f"{path}: {exc}") from exc
        written.append(path)
    return written
