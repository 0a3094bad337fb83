"""Nonlinear Cox regression with a small multilayer perceptron.

A two-hidden-layer tanh network maps covariates to a scalar score that
replaces the Cox linear predictor.  The loss is the negative Breslow
log partial likelihood averaged over events plus an l2 penalty on the
weight matrices, minimized by full-batch gradient descent with a fixed
learning rate.  Training is deterministic given the seed.  The output
layer starts at zero, so the untrained network scores every subject
equally.

Curves come from the Breslow baseline exactly as in the linear model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import Dataset, SurvKitError
from .base import RelativeRiskModel, breslow_baseline, partial_loglik_terms


class NonFiniteLoss(SurvKitError):
    """The training loss became NaN or infinite; lower the learning
    rate."""


@dataclass
class DeepSurvConfig:
    hidden: tuple = (60, 10)
    l2: float = 1e-4
    learning_rate: float = 0.05
    epochs: int = 500
    seed: int = 0

    def validate(self):
        if len(self.hidden) != 2 or any(h < 1 for h in self.hidden):
            raise SurvKitError("hidden must be two positive layer widths")
        if self.l2 < 0 or self.learning_rate < 0 or self.epochs < 0:
            raise SurvKitError("l2, learning_rate, epochs must be >= 0")


def _shapes(d, hidden):
    h1, h2 = hidden
    return [(d, h1), (h1,), (h1, h2), (h2,), (h2, 1), (1,)]


def _pack(arrays):
    return np.concatenate([a.ravel() for a in arrays])


def _unpack(flat, shapes):
    out = []
    pos = 0
    for s in shapes:
        size = int(np.prod(s))
        out.append(flat[pos:pos + size].reshape(s))
        pos += size
    return out


def _forward(params, X):
    W1, b1, W2, b2, W3, b3 = params
    a1 = np.tanh(X @ W1 + b1)
    a2 = np.tanh(a1 @ W2 + b2)
    r = (a2 @ W3 + b3).ravel()
    return r, a1, a2


def _loss_and_grad(flat, shapes, X, times, events, l2):
    """Training loss and its gradient in the flat parameter vector.

    loss = -(1/L) sum_{events} (r_i - log sum_{y_j >= y_i} e^{r_j})
           + l2 * (||W1||^2 + ||W2||^2 + ||W3||^2),
    with L the number of events.  Biases are not penalized.
    """
    params = _unpack(flat, shapes)
    W1, b1, W2, b2, W3, b3 = params
    r, a1, a2 = _forward(params, X)
    n_events = int(events.sum())
    loglik, dll_dr = partial_loglik_terms(times, events, r)
    loss = -loglik / n_events
    loss += l2 * ((W1 ** 2).sum() + (W2 ** 2).sum() + (W3 ** 2).sum())

    dr = (-dll_dr / n_events).reshape(-1, 1)
    dW3 = a2.T @ dr + 2 * l2 * W3
    db3 = dr.sum(axis=0)
    da2 = dr @ W3.T
    dz2 = da2 * (1 - a2 ** 2)
    dW2 = a1.T @ dz2 + 2 * l2 * W2
    db2 = dz2.sum(axis=0)
    da1 = dz2 @ W2.T
    dz1 = da1 * (1 - a1 ** 2)
    dW1 = X.T @ dz1 + 2 * l2 * W1
    db1 = dz1.sum(axis=0)
    return loss, _pack([dW1, db1, dW2, db2, dW3, db3])


def _init_params(d, hidden, seed):
    rng = np.random.Generator(np.random.PCG64(seed))
    shapes = _shapes(d, hidden)
    params = []
    for s in shapes:
        if len(s) == 1:
            params.append(np.zeros(s))
        else:
            limit = np.sqrt(6.0 / (s[0] + s[1]))
            params.append(rng.uniform(-limit, limit, size=s))
    # zero output layer: constant scores until the first update
    params[4] = np.zeros(shapes[4])
    return params


def fit_deepsurv(dataset: Dataset,
                 config: DeepSurvConfig | None = None) -> "DeepSurvModel":
    config = config or DeepSurvConfig()
    config.validate()
    X = dataset.covariates
    times, events = dataset.times, dataset.events
    shapes = _shapes(dataset.d, config.hidden)
    flat = _pack(_init_params(dataset.d, config.hidden, config.seed))

    trace = []
    for epoch in range(config.epochs):
        loss, grad = _loss_and_grad(flat, shapes, X, times, events, config.l2)
        if not np.isfinite(loss):
            raise NonFiniteLoss(f"loss diverged at epoch {epoch}")
        trace.append(float(loss))
        flat = flat - config.learning_rate * grad
    if not np.all(np.isfinite(flat)):
        raise NonFiniteLoss("weights diverged")

    params = _unpack(flat, shapes)
    scores, _, _ = _forward(params, X)
    grid, cumhaz = breslow_baseline(times, events, scores)
    return DeepSurvModel(params, config, grid, cumhaz, dataset.feature_names,
                         trace)


class DeepSurvModel(RelativeRiskModel):
    kind = "deepsurv"

    def __init__(self, params, config, training_grid, baseline_cumhaz,
                 feature_names, trace=()):
        super().__init__(training_grid, baseline_cumhaz, feature_names)
        self.params = [np.asarray(p, dtype=float) for p in params]
        self.config = config
        self.trace = list(trace)

    def _linear_predictor(self, x):
        r, _, _ = _forward(self.params, x.reshape(1, -1))
        return float(r[0])

    def predict_risk_many(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        r, _, _ = _forward(self.params, X)
        return r

    def predict_survival_matrix(self, X, grid) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        r, _, _ = _forward(self.params, X)
        idx = np.searchsorted(self.training_grid, grid, side="right") - 1
        cumhaz = np.where(idx < 0, 0.0,
                          self.baseline_cumhaz[np.maximum(idx, 0)])
        return np.exp(-np.outer(np.exp(r), cumhaz))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "feature_names": list(self.feature_names),
            "parameters": {
                "weights": [p.tolist() for p in self.params],
                "hidden": list(self.config.hidden) if self.config else None,
                "l2": self.config.l2 if self.config else None,
            },
            "grid": self.training_grid.tolist(),
            "baseline_cumhaz": self.baseline_cumhaz.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DeepSurvModel":
        p = doc["parameters"]
        params = [np.asarray(w, dtype=float) for w in p["weights"]]
        return cls(params, None, doc["grid"], doc["baseline_cumhaz"],
                   doc["feature_names"])
