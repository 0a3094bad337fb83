"""Gradient-boosted Cox regression.

The Cox linear predictor is replaced by an additive expansion
``f(x) = sum_k rho_k g_k(x)`` of regression trees.  Each stage fits a
squared-error regression tree to the negative gradient of the Cox
partial log likelihood at the current ``f`` (a martingale-type
residual) and adds it with a constant step size ``rho_k`` equal to the
learning rate.  The mortality risk is ``f(x)``, interpreted as a log
hazard ratio, and curves come from the Breslow baseline exactly as in
the linear Cox model.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.tree import DecisionTreeRegressor

from ..core import Dataset, SurvKitError
from .base import RelativeRiskModel, breslow_baseline, partial_loglik_terms


class DegenerateSplitWarning(UserWarning):
    """A boosting stage found no split that improves the criterion and
    produced a stump; harmless but worth knowing about."""


@dataclass
class GbcConfig:
    n_estimators: int = 100
    learning_rate: float = 0.1
    max_depth: int = 3
    min_samples_leaf: int = 1

    def validate(self):
        if self.n_estimators < 0 or self.learning_rate < 0:
            raise SurvKitError("n_estimators and learning_rate must be >= 0")
        if self.max_depth < 1 or self.min_samples_leaf < 1:
            raise SurvKitError("max_depth and min_samples_leaf must be >= 1")


def fit_gbc(dataset: Dataset, config: GbcConfig | None = None) -> "GbcModel":
    config = config or GbcConfig()
    config.validate()
    X = dataset.covariates
    times, events = dataset.times, dataset.events

    f = np.zeros(dataset.n)
    trees = []
    for stage in range(config.n_estimators):
        _, residual = partial_loglik_terms(times, events, f)
        tree = DecisionTreeRegressor(
            criterion="squared_error",
            max_depth=config.max_depth,
            min_samples_leaf=config.min_samples_leaf,
            random_state=stage,
        )
        tree.fit(X, residual)
        if tree.tree_.node_count == 1:
            warnings.warn(
                f"stage {stage}: no split improved the criterion",
                DegenerateSplitWarning, stacklevel=2)
        trees.append(tree)
        f = f + config.learning_rate * tree.predict(X)

    grid, cumhaz = breslow_baseline(times, events, f)
    return GbcModel(trees, config.learning_rate, grid, cumhaz,
                    dataset.feature_names, config)


class GbcModel(RelativeRiskModel):
    kind = "gbc"

    def __init__(self, trees, learning_rate, training_grid, baseline_cumhaz,
                 feature_names, config=None):
        super().__init__(training_grid, baseline_cumhaz, feature_names)
        self.trees = list(trees)
        self.learning_rate = float(learning_rate)
        self.config = config

    def _predict_f(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        f = np.zeros(X.shape[0])
        for tree in self.trees:
            f += self.learning_rate * tree.predict(X)
        return f

    def _linear_predictor(self, x):
        return float(self._predict_f(x.reshape(1, -1))[0])

    def predict_survival_matrix(self, X, grid) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        f = self._predict_f(X)
        idx = np.searchsorted(self.training_grid, grid, side="right") - 1
        cumhaz = np.where(idx < 0, 0.0,
                          self.baseline_cumhaz[np.maximum(idx, 0)])
        return np.exp(-np.outer(np.exp(f), cumhaz))

    def predict_risk_many(self, X) -> np.ndarray:
        return self._predict_f(X)

    def to_dict(self) -> dict:
        # trees serialize structurally: per-node arrays from sklearn
        packed = []
        for tree in self.trees:
            t = tree.tree_
            packed.append({
                "children_left": t.children_left.tolist(),
                "children_right": t.children_right.tolist(),
                "feature": t.feature.tolist(),
                "threshold": t.threshold.tolist(),
                "value": t.value.reshape(-1).tolist(),
            })
        return {
            "kind": self.kind,
            "feature_names": list(self.feature_names),
            "parameters": {
                "learning_rate": self.learning_rate,
                "trees": packed,
            },
            "grid": self.training_grid.tolist(),
            "baseline_cumhaz": self.baseline_cumhaz.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GbcModel":
        p = doc["parameters"]
        trees = [_PackedTree(t) for t in p["trees"]]
        return cls(trees, p["learning_rate"], doc["grid"],
                   doc["baseline_cumhaz"], doc["feature_names"])


class _PackedTree:
    """Replays a serialized sklearn tree for prediction."""

    def __init__(self, doc):
        self.left = np.asarray(doc["children_left"], dtype=int)
        self.right = np.asarray(doc["children_right"], dtype=int)
        self.feature = np.asarray(doc["feature"], dtype=int)
        self.threshold = np.asarray(doc["threshold"], dtype=float)
        self.value = np.asarray(doc["value"], dtype=float)

    def predict(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty(X.shape[0])
        for i, x in enumerate(X):
            node = 0
            while self.left[node] != -1:
                if x[self.feature[node]] <= self.threshold[node]:
                    node = self.left[node]
                else:
                    node = self.right[node]
            out[i] = self.value[node]
        return out
