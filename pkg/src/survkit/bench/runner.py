"""The 25-split comparison protocol.

For every dataset and every random train/validation partition, each
requested model variant is fit on the training side and scored on the
validation side with the concordance index and the integrated Brier
score.  Names ending in ``*`` denote randomized-search variants: the
configuration is chosen by cross-validated random search on the
training side before the final fit.  The ``ensemble`` entry aggregates
the six base models with weights from the five-fold protocol.

Scoring never leaks across the partition: standardization statistics
come from the training side only (unless ``paper_compat`` standardizes
everything upfront) and the IPCW censoring estimate is the validation
side's own Kaplan-Meier.

Everything is a pure function of the manifests and the master seed;
per-cell seeds derive from ``SeedSequence((master, dataset, split))``.
"""

from __future__ import annotations

import os
import sys
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..core import Dataset, SurvKitError
from ..ensemble import EnsembleConfig, fit_ensemble_cv
from ..models import MODEL_KINDS, ModelSpec, fit_model
from ..scoring import (concordance_index, default_horizon,
                       integrated_brier_score, km_censoring)
from .ingest import DatasetManifest, Standardizer, ingest
from .search import default_search_spaces, random_search
from .splits import split

DEFAULT_MODELS = (
    "cox", "cox*", "gbc", "gbc*", "rsf", "rsf*",
    "weibull_aft", "weibull_aft*", "aalen", "aalen*",
    "deepsurv", "deepsurv*", "ensemble",
)

_SEEDED_KINDS = ("rsf", "deepsurv")


def _cell_seed(master_seed: int, dataset_name: str, split_index: int) -> int:
    tag = zlib.crc32(dataset_name.encode("utf8"))
    ss = np.random.SeedSequence((int(master_seed), tag, int(split_index)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class BenchConfig:
    n_splits: int = 25
    train_fraction: float = 0.8
    metrics: tuple = ("concordance", "ibs")
    search_budget: int = 25
    search_metric: str = "concordance"
    search_folds: int = 5
    paper_compat: bool = False
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)

    def to_dict(self) -> dict:
        return {
            "n_splits": self.n_splits,
            "train_fraction": self.train_fraction,
            "metrics": list(self.metrics),
            "search_budget": self.search_budget,
            "search_metric": self.search_metric,
            "search_folds": self.search_folds,
            "paper_compat": self.paper_compat,
            "ensemble": {"eta": self.ensemble.eta,
                         "max_iter": self.ensemble.max_iter,
                         "stop_tol": self.ensemble.stop_tol,
                         "folds": self.ensemble.folds},
        }


def _base_kind(name: str) -> str:
    kind = name[:-1] if name.endswith("*") else name
    if kind != "ensemble" and kind not in MODEL_KINDS:
        raise SurvKitError(f"unknown model name {name!r}")
    return kind


def _score_model(model, val: Dataset, metrics) -> dict:
    censor = km_censoring(val)
    tau = default_horizon(val)
    out = {}
    if "concordance" in metrics:
        risks = model.predict_risk_many(val.covariates)
        out["concordance"] = float(concordance_index(risks, val))
    if "ibs" in metrics:
        curves = model.predict_curves(val)
        out["ibs"] = float(integrated_brier_score(curves, val, tau, censor))
    return out


def _run_split(dataset: Dataset, name: str, model_names, config: BenchConfig,
               seed: int):
    """All cells for one (dataset, split): returns (cells, ensemble_info)."""
    cells = []
    ensemble_info = None
    try:
        train, val = split(dataset, config.train_fraction, seed)
    except SurvKitError as exc:
        return ([{"model": m, "status": "failed", "error": str(exc)}
                 for m in model_names], None)
    if not config.paper_compat:
        scaler = Standardizer.fit(train)
        train = scaler.transform(train)
        val = scaler.transform(val)
    spaces = default_search_spaces(train.d)

    for model_name in model_names:
        kind = _base_kind(model_name)
        try:
            if kind == "ensemble":
                specs = [ModelSpec(k, _seed_config(k, seed)) for k in MODEL_KINDS]
                model = fit_ensemble_cv(specs, train, config.ensemble,
                                        seed=seed)
                ensemble_info = {
                    "weights": model.weights.values.tolist(),
                    "component_kinds": list(MODEL_KINDS),
                    "final_objective": float(model.trace[-1]),
                    "trace_length": int(model.trace.shape[0]),
                }
            else:
                if model_name.endswith("*"):
                    space = spaces[kind]
                    space.budget = config.search_budget
                    params = random_search(kind, space, train,
                                           metric=config.search_metric,
                                           folds=config.search_folds,
                                           seed=seed)
                else:
                    params = {}
                params.update(_seed_config(kind, seed))
                model = fit_model(kind, train, params)
            scores = _score_model(model, val, config.metrics)
        except SurvKitError as exc:
            cells.append({"model": model_name, "status": "failed",
                          "error": str(exc)})
            continue
        for metric, value in scores.items():
            cells.append({"model": model_name, "metric": metric,
                          "value": value, "status": "ok"})
    return cells, ensemble_info


def _seed_config(kind: str, seed: int) -> dict:
    return {"seed": seed % (2 ** 31)} if kind in _SEEDED_KINDS else {}


def _split_task(args):
    dataset, name, model_names, config, split_index, master_seed = args
    seed = _cell_seed(master_seed, name, split_index)
    cells, ensemble_info = _run_split(dataset, name, model_names, config, seed)
    return name, split_index, cells, ensemble_info


def run_benchmark(manifests, models=DEFAULT_MODELS, config=None,
                  master_seed: int = 0, workers: int | None = None) -> dict:
    """Run the full comparison and return the report dictionary.

    ``manifests`` may be DatasetManifest instances, paths to manifest
    files, or already-loaded Datasets paired with names as
    ``(name, Dataset)`` tuples.  Worker count defaults to the
    ``SURVKIT_WORKERS`` environment variable (1 = sequential).
    """
    config = config or BenchConfig()
    model_names = list(models)
    for m in model_names:
        _base_kind(m)
    if workers is None:
        workers = int(os.environ.get("SURVKIT_WORKERS", "1"))

    datasets = []
    for m in manifests:
        if isinstance(m, tuple):
            name, dataset = m
        else:
            manifest = (m if isinstance(m, DatasetManifest)
                        else DatasetManifest.from_file(m))
            dataset = ingest(
                manifest,
                standardize="full" if config.paper_compat else "none")
            name = manifest.name
        datasets.append((name, dataset))

    tasks = [(dataset, name, model_names, config, s, master_seed)
             for name, dataset in datasets
             for s in range(config.n_splits)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_split_task, tasks, chunksize=1))
    else:
        raw = [_split_task(t) for t in tasks]
    raw.sort(key=lambda r: (r[0], r[1]))

    cells = []
    ensembles = {}
    for name, split_index, split_cells, ensemble_info in raw:
        for cell in split_cells:
            cells.append({"dataset": name, "split": split_index, **cell})
        if ensemble_info is not None:
            ensembles.setdefault(name, {})[str(split_index)] = ensemble_info

    report = {
        "config": {**config.to_dict(), "models": model_names,
                   "master_seed": master_seed},
        "environment": {
            "python": sys.version.split()[0],
            "numpy": np.__version__,
        },
        "datasets": {
            name: {"n": int(ds.n), "d": int(ds.d),
                   "censor_rate": round(float(ds.censor_rate), 6)}
            for name, ds in datasets
        },
        "cells": cells,
        "ensemble": ensembles,
        "aggregates": _aggregate(cells, [n for n, _ in datasets],
                                 model_names, config.metrics),
        "n_failed": sum(1 for c in cells if c["status"] == "failed"),
    }
    return report


def _aggregate(cells, dataset_names, model_names, metrics) -> dict:
    per_dataset = {}
    for ds in dataset_names:
        per_dataset[ds] = {}
        for model in model_names:
            per_dataset[ds][model] = {}
            for metric in metrics:
                vals = [c["value"] for c in cells
                        if c["status"] == "ok" and c["dataset"] == ds
                        and c["model"] == model and c.get("metric") == metric]
                if vals:
                    per_dataset[ds][model][metric] = {
                        "mean": float(np.mean(vals)),
                        "sd": float(np.std(vals, ddof=1)) if len(vals) > 1
                        else 0.0,
                        "n": len(vals),
                    }

    overall = {}
    for model in model_names:
        overall[model] = {}
        for metric in metrics:
            means = [per_dataset[ds][model][metric]["mean"]
                     for ds in dataset_names
                     if metric in per_dataset[ds].get(model, {})]
            if means:
                overall[model][metric] = float(np.mean(means))

    # rank aggregates: the best/second/third per-dataset mean among the
    # non-ensemble models, averaged across datasets
    base_models = [m for m in model_names if _base_kind(m) != "ensemble"]
    ranks = {}
    for metric in metrics:
        best = (max if metric == "concordance" else min)
        columns = {"first": [], "second": [], "third": []}
        for ds in dataset_names:
            means = sorted(
                (per_dataset[ds][m][metric]["mean"] for m in base_models
                 if metric in per_dataset[ds].get(m, {})),
                reverse=(best is max))
            for i, label in enumerate(("first", "second", "third")):
                if len(means) > i:
                    columns[label].append(means[i])
        ranks[metric] = {label: (float(np.mean(vals)) if vals else None)
                         for label, vals in columns.items()}

    return {"per_dataset": per_dataset, "overall": overall,
            "rank_aggregates": ranks}
