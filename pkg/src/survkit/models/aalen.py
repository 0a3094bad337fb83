"""Aalen additive hazards regression.

``h(t | x) = b0(t) + b(t)' x``: covariate effects are additive and may
vary over time.  The cumulative coefficient paths ``B(t)`` are estimated
at each event time by (optionally ridge-penalized) least squares of the
event indicator on the at-risk design matrix.  Because additive hazards
can produce locally negative increments, predicted cumulative hazards
are floored at zero and made non-decreasing before exponentiating, so
emitted curves satisfy the shared curve invariants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Dataset, SurvKitError, SurvivalCurve, restricted_mean
from .base import FittedModel


class SingularDesign(SurvKitError):
    """The at-risk design matrix is rank deficient and no penalizer was
    set; increments are not identified."""


@dataclass
class AalenConfig:
    penalizer: float = 0.0

    def validate(self):
        if self.penalizer < 0:
            raise SurvKitError("penalizer must be nonnegative")


def fit_aalen(dataset: Dataset, config: AalenConfig | None = None) -> "AalenModel":
    config = config or AalenConfig()
    config.validate()
    X = dataset.covariates
    times, events = dataset.times, dataset.events
    n, d = X.shape
    pen = config.penalizer
    penalty = np.zeros((d + 1, d + 1))
    penalty[1:, 1:] = pen * np.eye(d)  # the intercept is never penalized

    order = np.argsort(times, kind="stable")
    t_s = times[order]
    e_s = events[order]
    Z = np.column_stack([np.ones(n), X[order]])

    # walk tie groups backwards, accumulating the at-risk Gram matrix
    groups = []
    gram = np.zeros((d + 1, d + 1))
    i = n - 1
    while i >= 0:
        j = i
        zd = np.zeros(d + 1)
        d_k = 0
        while j >= 0 and t_s[j] == t_s[i]:
            gram += np.outer(Z[j], Z[j])
            if e_s[j]:
                zd += Z[j]
                d_k += 1
            j -= 1
        if d_k > 0:
            groups.append((t_s[i], gram.copy(), zd))
        i = j
    groups.reverse()

    # the unpenalized estimator exists only while the at-risk design has
    # full rank; once it degenerates (late event times with few subjects
    # at risk) the increments freeze at zero, the classical convention
    grid = np.empty(len(groups))
    increments = np.zeros((len(groups), d + 1))
    frozen = False
    for k, (t_k, gram_k, zd_k) in enumerate(groups):
        grid[k] = t_k
        if frozen:
            continue
        lhs = gram_k + penalty
        if pen == 0.0 and np.linalg.cond(lhs) > 1e12:
            if k == 0:
                raise SingularDesign(
                    "rank-deficient at-risk design at the first event time; "
                    "set a penalizer")
            frozen = True
            continue
        increments[k] = np.linalg.solve(lhs, zd_k)

    cumulative = np.cumsum(increments, axis=0)
    return AalenModel(grid, cumulative, pen, dataset.feature_names)


class AalenModel(FittedModel):
    kind = "aalen"

    def __init__(self, training_grid, cumulative_coefficients, penalizer,
                 feature_names):
        super().__init__(training_grid, feature_names)
        self.cumulative_coefficients = np.asarray(cumulative_coefficients,
                                                  dtype=float)
        self.penalizer = float(penalizer)

    def cumulative_hazard(self, subject) -> np.ndarray:
        """Monotone, nonnegative cumulative hazard on the training grid."""
        x = self._covariates(subject)
        raw = (self.cumulative_coefficients[:, 0]
               + self.cumulative_coefficients[:, 1:] @ x)
        c = np.maximum.accumulate(raw)
        return np.maximum(c, 0.0)

    def predict_survival(self, subject, times=None) -> SurvivalCurve:
        values = np.exp(-self.cumulative_hazard(subject))
        curve = SurvivalCurve(self.training_grid, values)
        if times is None:
            return curve
        grid = np.asarray(times, dtype=float)
        from ..core import step_interpolate
        return SurvivalCurve(grid, step_interpolate(curve.times, curve.values,
                                                    grid))

    def predict_risk(self, subject) -> float:
        return -restricted_mean(self.predict_survival(subject))

    def predict_survival_matrix(self, X, grid) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        raw = (self.cumulative_coefficients[:, 0][None, :]
               + X @ self.cumulative_coefficients[:, 1:].T)
        c = np.maximum(np.maximum.accumulate(raw, axis=1), 0.0)
        own = np.exp(-c)
        idx = np.searchsorted(self.training_grid, grid, side="right") - 1
        return np.where(idx[None, :] < 0, 1.0, own[:, np.maximum(idx, 0)])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "feature_names": list(self.feature_names),
            "parameters": {
                "cumulative_coefficients":
                    self.cumulative_coefficients.tolist(),
                "penalizer": self.penalizer,
            },
            "grid": self.training_grid.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "AalenModel":
        p = doc["parameters"]
        return cls(doc["grid"], p["cumulative_coefficients"], p["penalizer"],
                   doc["feature_names"])
