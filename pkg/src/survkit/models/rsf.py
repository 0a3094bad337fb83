"""Random survival forest.

Each tree is grown on a bootstrap resample.  At every node a random
subset of at most ``max_features`` features is considered; all split
thresholds between distinct values of a candidate feature are scored
with the log-rank statistic, computed incrementally while sweeping the
feature-sorted samples so that a full node scan costs
O(samples * unique event times) inside a compiled kernel.  Leaves store
the Nelson-Aalen cumulative hazard of their training subjects.

Predictions average the per-tree leaf cumulative hazards:
``S(t | x) = exp(-mean_trees CHF_leaf(t))``.  The mortality risk is the
ensemble mortality, the sum of the ensemble cumulative hazard over the
training grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..core import Dataset, SurvKitError, SurvivalCurve
from .base import FittedModel, nelson_aalen


@dataclass
class RsfConfig:
    n_trees: int = 100
    max_features: int | None = None  # None means all features
    min_samples_leaf: int = 3
    max_depth: int | None = None  # None means grow until pure
    seed: int = 0

    def validate(self):
        if self.n_trees < 1 or self.min_samples_leaf < 1:
            raise SurvKitError("n_trees and min_samples_leaf must be >= 1")
        if self.max_features is not None and self.max_features < 1:
            raise SurvKitError("max_features must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise SurvKitError("max_depth must be >= 1")


@njit(cache=True)
def _best_split(Xn, yn, en, feat_ids, min_leaf):
    """Exhaustive log-rank split search over the given features.

    For a candidate left group L the statistic is N^2 / V with
    N = sum_k (d_kL - n_kL d_k / n_k) and the hypergeometric variance
    V = sum_k d_k (n_kL/n_k)(1 - n_kL/n_k)(n_k - d_k)/(n_k - 1).
    Both decompose into prefix sums over the feature-sorted sweep:
    N is linear in per-sample terms, and V = sum A_k n_kL - B_k n_kL^2
    needs only the running n_kL counts.

    Returns (feature, threshold, score); feature is -1 when no valid
    split exists.
    """
    m = yn.shape[0]
    order_t = np.argsort(yn)

    # unique event times with event counts and at-risk counts
    u = 0
    i = 0
    while i < m:
        j = i
        d_k = 0.0
        while j < m and yn[order_t[j]] == yn[order_t[i]]:
            d_k += en[order_t[j]]
            j += 1
        if d_k > 0.0:
            u += 1
        i = j
    if u == 0:
        return -1, 0.0, 0.0

    t_ev = np.empty(u)
    a_coef = np.empty(u)  # A_k
    b_coef = np.empty(u)  # B_k = A_k / n_k
    w_coef = np.empty(u)  # d_k / n_k
    k = 0
    i = 0
    while i < m:
        j = i
        d_k = 0.0
        while j < m and yn[order_t[j]] == yn[order_t[i]]:
            d_k += en[order_t[j]]
            j += 1
        if d_k > 0.0:
            n_k = float(m - i)
            t_ev[k] = yn[order_t[i]]
            w_coef[k] = d_k / n_k
            if n_k > 1.0:
                a_k = d_k * (n_k - d_k) / ((n_k - 1.0) * n_k)
            else:
                a_k = 0.0
            a_coef[k] = a_k
            b_coef[k] = a_k / n_k
            k += 1
        i = j

    # per-sample prefix sums over event times with t_k <= y_i
    ranks = np.searchsorted(t_ev, yn, side="right")
    w_prefix = np.empty(u + 1)
    a_prefix = np.empty(u + 1)
    w_prefix[0] = 0.0
    a_prefix[0] = 0.0
    for k in range(u):
        w_prefix[k + 1] = w_prefix[k] + w_coef[k]
        a_prefix[k + 1] = a_prefix[k] + a_coef[k]

    best_score = 0.0
    best_feat = -1
    best_thr = 0.0
    n_left = np.zeros(u)
    for fi in range(feat_ids.shape[0]):
        f = feat_ids[fi]
        x = Xn[:, f]
        order = np.argsort(x)
        for k in range(u):
            n_left[k] = 0.0
        s2 = 0.0
        nev_left = 0.0
        sum_w = 0.0
        sum_a = 0.0
        for c in range(m - 1):
            i_s = order[c]
            r = ranks[i_s]
            for k in range(r):
                s2 += b_coef[k] * (2.0 * n_left[k] + 1.0)
                n_left[k] += 1.0
            nev_left += en[i_s]
            sum_w += w_prefix[r]
            sum_a += a_prefix[r]
            size_left = c + 1
            if size_left < min_leaf or (m - size_left) < min_leaf:
                continue
            xa = x[order[c]]
            xb = x[order[c + 1]]
            if xa == xb:
                continue
            variance = sum_a - s2
            if variance <= 1e-12:
                continue
            numer = nev_left - sum_w
            score = numer * numer / variance
            if score > best_score:
                best_score = score
                best_feat = f
                best_thr = 0.5 * (xa + xb)
    return best_feat, best_thr, best_score


def _grow_tree(X, times, events, indices, depth, config, max_features, rng):
    m = indices.shape[0]
    if (m < 2 * config.min_samples_leaf
            or not events[indices].any()
            or (config.max_depth is not None and depth >= config.max_depth)):
        return _make_leaf(times, events, indices)
    d = X.shape[1]
    if max_features >= d:
        feats = np.arange(d, dtype=np.int64)
    else:
        feats = rng.permutation(d)[:max_features].astype(np.int64)
    feat, thr, score = _best_split(X[indices], times[indices],
                                   events[indices].astype(np.float64),
                                   feats, config.min_samples_leaf)
    if feat < 0 or score <= 0.0:
        return _make_leaf(times, events, indices)
    mask = X[indices, feat] <= thr
    return {
        "feature": int(feat),
        "threshold": float(thr),
        "left": _grow_tree(X, times, events, indices[mask], depth + 1,
                           config, max_features, rng),
        "right": _grow_tree(X, times, events, indices[~mask], depth + 1,
                            config, max_features, rng),
    }


def _make_leaf(times, events, indices):
    grid, chf = nelson_aalen(times[indices], events[indices])
    return {"times": grid, "chf": chf}


def fit_rsf(dataset: Dataset, config: RsfConfig | None = None) -> "RsfModel":
    config = config or RsfConfig()
    config.validate()
    X = dataset.covariates
    times, events = dataset.times, dataset.events
    max_features = config.max_features or dataset.d
    rng = np.random.Generator(np.random.PCG64(config.seed))

    trees = []
    for _ in range(config.n_trees):
        boot = np.sort(rng.integers(0, dataset.n, dataset.n))
        trees.append(_grow_tree(X, times, events, boot, 0, config,
                                max_features, rng))
    grid = np.unique(times[events])
    return RsfModel(trees, grid, config, dataset.feature_names)


def _chf_on_grid(leaf, grid):
    # a cumulative hazard is 0 before its first knot
    if leaf["times"].shape[0] == 0:
        return np.zeros(grid.shape[0])
    idx = np.searchsorted(leaf["times"], grid, side="right") - 1
    return np.where(idx < 0, 0.0, leaf["chf"][np.maximum(idx, 0)])


def _tree_chf_matrix(tree, X, grid, out):
    stack = [(tree, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if idx.shape[0] == 0:
            continue
        if "feature" not in node:
            out[idx] += _chf_on_grid(node, grid)
        else:
            mask = X[idx, node["feature"]] <= node["threshold"]
            stack.append((node["left"], idx[mask]))
            stack.append((node["right"], idx[~mask]))


class RsfModel(FittedModel):
    kind = "rsf"

    def __init__(self, trees, training_grid, config, feature_names):
        super().__init__(training_grid, feature_names)
        self.trees = trees
        self.config = config

    def ensemble_chf_matrix(self, X) -> np.ndarray:
        """Mean cumulative hazard over trees on the training grid: (n, U)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        total = np.zeros((X.shape[0], self.training_grid.shape[0]))
        for tree in self.trees:
            _tree_chf_matrix(tree, X, self.training_grid, total)
        return total / len(self.trees)

    def predict_survival(self, subject, times=None) -> SurvivalCurve:
        x = self._covariates(subject)
        chf = self.ensemble_chf_matrix(x.reshape(1, -1))[0]
        curve = SurvivalCurve(self.training_grid, np.exp(-chf))
        if times is None:
            return curve
        from ..core import step_interpolate
        grid = np.asarray(times, dtype=float)
        return SurvivalCurve(grid, step_interpolate(curve.times, curve.values,
                                                    grid))

    def predict_risk(self, subject) -> float:
        x = self._covariates(subject)
        chf = self.ensemble_chf_matrix(x.reshape(1, -1))[0]
        return float(chf.sum())

    def predict_risk_many(self, X) -> np.ndarray:
        return self.ensemble_chf_matrix(X).sum(axis=1)

    def predict_survival_matrix(self, X, grid) -> np.ndarray:
        own = np.exp(-self.ensemble_chf_matrix(X))
        idx = np.searchsorted(self.training_grid, grid, side="right") - 1
        return np.where(idx[None, :] < 0, 1.0, own[:, np.maximum(idx, 0)])

    def to_dict(self) -> dict:
        def pack(node):
            if "feature" in node:
                return {"feature": node["feature"],
                        "threshold": node["threshold"],
                        "left": pack(node["left"]),
                        "right": pack(node["right"])}
            return {"times": node["times"].tolist(),
                    "chf": node["chf"].tolist()}

        return {
            "kind": self.kind,
            "feature_names": list(self.feature_names),
            "parameters": {
                "trees": [pack(t) for t in self.trees],
                "n_trees": len(self.trees),
            },
            "grid": self.training_grid.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RsfModel":
        def unpack(node):
            if "feature" in node:
                return {"feature": int(node["feature"]),
                        "threshold": float(node["threshold"]),
                        "left": unpack(node["left"]),
                        "right": unpack(node["right"])}
            return {"times": np.asarray(node["times"], dtype=float),
                    "chf": np.asarray(node["chf"], dtype=float)}

        trees = [unpack(t) for t in doc["parameters"]["trees"]]
        return cls(trees, np.asarray(doc["grid"], dtype=float), None,
                   doc["feature_names"])
