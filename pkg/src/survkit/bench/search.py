"""Randomized hyperparameter search with k-fold cross-validation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import Dataset, SurvKitError
from ..models import ModelSpec, fit_model
from ..scoring import (concordance_index, default_horizon,
                       integrated_brier_score, km_censoring)
from .splits import stratified_folds


@dataclass
class ParamRange:
    """A sampling rule for one parameter: uniform or log-uniform over
    [low, high], an integer range, or a finite choice set."""

    low: float | None = None
    high: float | None = None
    log: bool = False
    integer: bool = False
    choices: tuple | None = None

    def sample(self, rng: np.random.Generator):
        if self.choices is not None:
            return self.choices[int(rng.integers(0, len(self.choices)))]
        if self.log:
            value = float(np.exp(rng.uniform(np.log(self.low),
                                             np.log(self.high))))
        else:
            value = float(rng.uniform(self.low, self.high))
        return int(round(value)) if self.integer else value


@dataclass
class SearchSpace:
    """Per-parameter distributions plus a draw budget."""

    params: dict = field(default_factory=dict)  # name -> ParamRange
    budget: int = 25

    def sample(self, rng: np.random.Generator) -> dict:
        return {name: p.sample(rng) for name, p in self.params.items()}


def default_search_spaces(d: int) -> dict:
    """Reasonable desk-scale search spaces per model kind."""
    return {
        "cox": SearchSpace({
            "ridge_alpha": ParamRange(1e-4, 10.0, log=True),
        }),
        "gbc": SearchSpace({
            "n_estimators": ParamRange(choices=(50, 100, 200)),
            "learning_rate": ParamRange(0.01, 0.3, log=True),
            "max_depth": ParamRange(choices=(2, 3, 4, 5)),
            "min_samples_leaf": ParamRange(choices=(1, 5, 10, 20)),
        }),
        "rsf": SearchSpace({
            "n_trees": ParamRange(choices=(50, 100, 200)),
            "max_features": ParamRange(choices=tuple(
                sorted({max(1, d // 3), max(1, int(np.sqrt(d))), d}))),
            "min_samples_leaf": ParamRange(choices=(3, 5, 10, 20)),
        }),
        "weibull_aft": SearchSpace({
            "penalizer": ParamRange(1e-6, 1.0, log=True),
            "l1_ratio": ParamRange(0.0, 1.0),
        }),
        "aalen": SearchSpace({
            "penalizer": ParamRange(1e-4, 10.0, log=True),
        }),
        "deepsurv": SearchSpace({
            "hidden": ParamRange(choices=((60, 10), (30, 10), (120, 20))),
            "l2": ParamRange(1e-6, 1e-2, log=True),
            "learning_rate": ParamRange(0.005, 0.1, log=True),
            "epochs": ParamRange(choices=(200, 400)),
        }),
    }


def _cv_score(kind: str, config: dict, dataset: Dataset, metric: str,
              folds) -> float:
    """Mean held-out score over folds; higher is better (IBS negated)."""
    scores = []
    for holdout in folds:
        rest = np.setdiff1d(np.arange(dataset.n), holdout)
        train = dataset.subset(rest)
        val = dataset.subset(holdout)
        model = fit_model(kind, train, dict(config))
        if metric == "concordance":
            risks = model.predict_risk_many(val.covariates)
            scores.append(concordance_index(risks, val))
        else:
            censor = km_censoring(val)
            tau = default_horizon(val)
            curves = model.predict_curves(val)
            scores.append(-integrated_brier_score(curves, val, tau, censor))
    return float(np.mean(scores))


def random_search(model_kind: str, space: SearchSpace, train: Dataset,
                  metric: str = "concordance", folds: int = 5,
                  seed: int = 0) -> dict:
    """Sample ``space.budget`` configurations, score each by k-fold
    cross-validation, and return the best (ties keep the first sampled).

    A configuration whose fit fails anywhere scores worst rather than
    aborting the search.
    """
    if space.budget < 1:
        raise SurvKitError("search budget must be >= 1")
    if metric not in ("concordance", "ibs"):
        raise SurvKitError(f"unknown metric {metric!r}")
    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence((int(seed), 0xBE57))))
    fold_idx = stratified_folds(train, folds, seed)

    best_config, best_score = None, -np.inf
    for _ in range(space.budget):
        config = space.sample(rng)
        try:
            score = _cv_score(model_kind, config, train, metric, fold_idx)
        except SurvKitError:
            score = -np.inf
        if score > best_score:
            best_config, best_score = config, score
    if best_config is None:
        raise SurvKitError(f"every sampled {model_kind} configuration failed")
    return best_config
