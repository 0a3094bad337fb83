"""Shared fitted-model contract and proportional-hazards plumbing.

Every fitter returns a :class:`FittedModel` exposing the same surface:
``predict_survival`` gives a step-function survival curve on the model's
training grid and ``predict_risk`` a scalar mortality score whose
ordering is the only thing that matters (higher = shorter expected
life).  Models built on a relative-risk score (Cox, gradient-boosted
Cox, the neural Cox variant) share the Breslow baseline estimator here.
"""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from ..core import (Dataset, DimensionMismatch, SurvKitError, Subject,
                    SurvivalCurve, step_interpolate)


class NonConvergence(SurvKitError):
    """An iterative fitter hit its iteration cap before converging."""


class FittedModel(ABC):
    """A trained survival predictor.

    Immutable after construction; safe to share across threads for
    prediction.  ``training_grid`` is the sorted unique event-time grid
    of the training data, on which baseline quantities live and default
    curves are emitted.
    """

    kind: str

    def __init__(self, training_grid, feature_names):
        self.training_grid = np.asarray(training_grid, dtype=float)
        self.feature_names = tuple(feature_names)

    @property
    def d(self) -> int:
        return len(self.feature_names)

    def _covariates(self, subject) -> np.ndarray:
        x = subject.covariates if isinstance(subject, Subject) else subject
        x = np.asarray(x, dtype=float).ravel()
        if x.shape[0] != self.d:
            raise DimensionMismatch(
                f"subject has {x.shape[0]} covariates, model expects {self.d}")
        return x

    @abstractmethod
    def predict_risk(self, subject) -> float:
        """Scalar mortality risk; higher means expected earlier failure."""

    @abstractmethod
    def predict_survival(self, subject, times=None) -> SurvivalCurve:
        """Survival curve for one subject, on ``times`` or the training
        grid."""

    def predict_risk_many(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array([self.predict_risk(x) for x in X])

    def predict_survival_matrix(self, X, grid) -> np.ndarray:
        """Survival evaluations for many subjects on a shared grid: (n, G)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        rows = []
        for x in X:
            c = self.predict_survival(x)
            rows.append(step_interpolate(c.times, c.values, grid))
        return np.vstack(rows)

    def predict_curves(self, dataset: Dataset):
        """One curve per subject of ``dataset``, on the training grid."""
        return [self.predict_survival(x) for x in dataset.covariates]

    @abstractmethod
    def to_dict(self) -> dict:
        """Self-describing JSON document: kind, parameters, grid."""


# ---------------------------------------------------------------------------
# Cox partial likelihood machinery (Breslow convention for tied times)
# ---------------------------------------------------------------------------

def partial_loglik_terms(times, events, scores):
    """Log partial likelihood and its per-subject score gradient.

    Uses the Breslow convention: tied events share the full risk set
    ``{j : y_j >= t}``.  Returns ``(loglik, grad)`` where ``grad[i]`` is
    the derivative of the log partial likelihood with respect to
    ``scores[i]``; for events this is ``1 - e^{s_i} * A_i`` and for
    censored subjects ``-e^{s_i} * A_i``, with
    ``A_i = sum over event times t_k <= y_i of d_k-free 1 / D_k`` and
    ``D_k`` the risk-set sum of ``e^s``.

    ``grad`` is also the negative gradient of the loss used by the
    boosting fitter (a martingale-type residual).
    """
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=bool)
    scores = np.asarray(scores, dtype=float)
    n = times.shape[0]
    order = np.argsort(times, kind="stable")
    t_s = times[order]
    e_s = events[order]
    shift = scores.max()
    w_s = np.exp(scores[order] - shift)

    # suffix sums of e^s give risk-set denominators at each tie group
    suffix = np.cumsum(w_s[::-1])[::-1]
    loglik = 0.0
    # cumulative sum over event groups of d_k / D_k, evaluated at y_i
    cum_inv = np.zeros(n)
    running = 0.0
    i = 0
    while i < n:
        j = i
        d = 0
        s_sum = 0.0
        while j < n and t_s[j] == t_s[i]:
            if e_s[j]:
                d += 1
                s_sum += scores[order[j]]
            j += 1
        if d > 0:
            denom = suffix[i]
            loglik += s_sum - d * (np.log(denom) + shift)
            running += d / denom
        cum_inv[i:j] = running
        i = j

    grad_sorted = e_s.astype(float) - w_s * cum_inv
    grad = np.empty(n)
    grad[order] = grad_sorted
    return loglik, grad


def breslow_baseline(times, events, scores):
    """Breslow estimator of the baseline cumulative hazard.

    L0(t) = sum over event times t_k <= t of d_k / sum_{j: y_j >= t_k}
    e^{s_j}.  Returns ``(grid, cumhaz)`` on the sorted unique event
    times.  ``scores`` may be shifted by any constant; the shift is
    absorbed so that ``exp(-L0(t) * e^{s})`` is unchanged.
    """
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=bool)
    scores = np.asarray(scores, dtype=float)
    shift = scores.max()
    order = np.argsort(times, kind="stable")
    t_s = times[order]
    e_s = events[order]
    w_s = np.exp(scores[order] - shift)
    suffix = np.cumsum(w_s[::-1])[::-1]

    grid, increments = [], []
    i = 0
    n = times.shape[0]
    while i < n:
        j = i
        d = 0
        while j < n and t_s[j] == t_s[i]:
            d += int(e_s[j])
            j += 1
        if d > 0:
            grid.append(t_s[i])
            increments.append(d / suffix[i] * np.exp(-shift))
        i = j
    return np.asarray(grid), np.cumsum(increments)


def nelson_aalen(times, events):
    """Nelson-Aalen cumulative hazard: sum of d_k / n_k over event times.

    Returns ``(grid, cumhaz)``; the Breslow estimator with all scores
    zero reduces to exactly this.
    """
    return breslow_baseline(times, events, np.zeros(len(times)))


class RelativeRiskModel(FittedModel):
    """Base for models of the form S(t|x) = exp(-L0(t) * e^{f(x)})."""

    def __init__(self, training_grid, baseline_cumhaz, feature_names):
        super().__init__(training_grid, feature_names)
        self.baseline_cumhaz = np.asarray(baseline_cumhaz, dtype=float)

    def _linear_predictor(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def predict_risk(self, subject) -> float:
        return float(self._linear_predictor(self._covariates(subject)))

    def predict_survival(self, subject, times=None) -> SurvivalCurve:
        x = self._covariates(subject)
        f = self._linear_predictor(x)
        if times is None:
            grid = self.training_grid
            cumhaz = self.baseline_cumhaz
        else:
            grid = np.asarray(times, dtype=float)
            idx = np.searchsorted(self.training_grid, grid, side="right") - 1
            cumhaz = np.where(idx < 0, 0.0,
                              self.baseline_cumhaz[np.maximum(idx, 0)])
        values = np.exp(-cumhaz * np.exp(f))
        return SurvivalCurve(grid, values)

    def predict_survival_matrix(self, X, grid) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        f = np.array([self._linear_predictor(x) for x in X])
        idx = np.searchsorted(self.training_grid, grid, side="right") - 1
        cumhaz = np.where(idx < 0, 0.0,
                          self.baseline_cumhaz[np.maximum(idx, 0)])
        return np.exp(-np.outer(np.exp(f), cumhaz))
