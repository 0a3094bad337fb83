"""Weibull accelerated failure time regression.

``S(t | x) = exp(-(t / rho(x))^shape)`` with ``rho(x) = exp(b0 + beta' x)``:
covariates rescale the time axis.  Parameters maximize the censored
Weibull log likelihood with an optional elastic-net penalty on ``beta``.
The mortality risk is the negated restricted mean event time, so that
higher risk still means shorter expected life.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from ..core import Dataset, SurvKitError, SurvivalCurve, restricted_mean
from .base import FittedModel, NonConvergence


class NonPositiveTime(SurvKitError):
    """The Weibull likelihood needs strictly positive observed times."""


@dataclass
class WeibullAftConfig:
    penalizer: float = 0.0
    l1_ratio: float = 0.0
    max_iter: int = 500
    tol: float = 1e-10

    def validate(self):
        if self.penalizer < 0 or not 0 <= self.l1_ratio <= 1:
            raise SurvKitError("penalizer must be >= 0 and l1_ratio in [0, 1]")


def _negloglik(params, X, log_t, events, penalizer, l1_ratio):
    """Penalized negative log likelihood and gradient.

    params = (log_shape, b0, beta).  With z = shape * (log t - log rho),
    the per-subject log likelihood is
    ``event * (log_shape + z - log t) - exp(z)``.
    """
    log_shape, b0 = params[0], params[1]
    beta = params[2:]
    shape = np.exp(log_shape)
    log_rho = b0 + X @ beta
    z = shape * (log_t - log_rho)
    ez = np.exp(z)

    ll = np.sum(events * (log_shape + z - log_t) - ez)
    resid = events - ez  # d ll_i / d z_i
    # dz/dlog_shape = z, dz/db0 = -shape, dz/dbeta_j = -shape * x_j
    g_log_shape = np.sum(events + resid * z)
    g_b0 = -shape * np.sum(resid)
    g_beta = -shape * (X.T @ resid)

    pen = penalizer * (l1_ratio * np.sum(np.abs(beta))
                       + 0.5 * (1 - l1_ratio) * beta @ beta)
    g_pen = penalizer * (l1_ratio * np.sign(beta) + (1 - l1_ratio) * beta)
    grad = np.concatenate(([g_log_shape, g_b0], g_beta))
    return -(ll - pen), -grad + np.concatenate(([0.0, 0.0], g_pen))


def fit_weibull_aft(dataset: Dataset,
                    config: WeibullAftConfig | None = None) -> "WeibullAftModel":
    config = config or WeibullAftConfig()
    config.validate()
    if np.any(dataset.times <= 0):
        raise NonPositiveTime("observed times must be strictly positive")
    X = dataset.covariates
    log_t = np.log(dataset.times)
    events = dataset.events.astype(float)

    x0 = np.zeros(2 + dataset.d)
    x0[1] = float(np.mean(log_t))  # start rho at the time scale of the data
    res = optimize.minimize(
        _negloglik, x0, jac=True,
        args=(X, log_t, events, config.penalizer, config.l1_ratio),
        method="L-BFGS-B",
        options={"maxiter": config.max_iter, "ftol": config.tol,
                 "gtol": config.tol})
    if not res.success and np.max(np.abs(res.jac)) > 1e-4:
        raise NonConvergence(f"optimizer stopped: {res.message}")

    shape = float(np.exp(res.x[0]))
    grid = np.unique(dataset.times[dataset.events])
    return WeibullAftModel(res.x[1], res.x[2:], shape, config.penalizer,
                           config.l1_ratio, grid, dataset.feature_names)


class WeibullAftModel(FittedModel):
    kind = "weibull_aft"

    def __init__(self, beta0, beta, shape, penalizer, l1_ratio,
                 training_grid, feature_names):
        super().__init__(training_grid, feature_names)
        self.beta0 = float(beta0)
        self.beta = np.asarray(beta, dtype=float)
        self.shape = float(shape)
        self.penalizer = float(penalizer)
        self.l1_ratio = float(l1_ratio)

    def scale(self, subject) -> float:
        """rho(x): the subject-specific Weibull scale."""
        x = self._covariates(subject)
        return float(np.exp(self.beta0 + self.beta @ x))

    def predict_survival(self, subject, times=None) -> SurvivalCurve:
        rho = self.scale(subject)
        grid = self.training_grid if times is None else np.asarray(times, float)
        values = np.exp(-np.power(grid / rho, self.shape))
        return SurvivalCurve(grid, values)

    def predict_risk(self, subject) -> float:
        # negated restricted mean: higher risk = shorter expected life
        return -restricted_mean(self.predict_survival(subject))

    def hazard(self, subject, times) -> np.ndarray:
        rho = self.scale(subject)
        t = np.asarray(times, dtype=float)
        return (self.shape / rho) * np.power(t / rho, self.shape - 1)

    def predict_survival_matrix(self, X, grid) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        rho = np.exp(self.beta0 + X @ self.beta)
        # evaluate the closed form at the model grid, then step onto
        # the target grid like every other model
        own = np.exp(-np.power(self.training_grid[None, :] / rho[:, None],
                               self.shape))
        idx = np.searchsorted(self.training_grid, grid, side="right") - 1
        return np.where(idx[None, :] < 0, 1.0, own[:, np.maximum(idx, 0)])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "feature_names": list(self.feature_names),
            "parameters": {
                "beta0": self.beta0,
                "beta": self.beta.tolist(),
                "shape": self.shape,
                "penalizer": self.penalizer,
                "l1_ratio": self.l1_ratio,
            },
            "grid": self.training_grid.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "WeibullAftModel":
        p = doc["parameters"]
        return cls(p["beta0"], p["beta"], p["shape"], p["penalizer"],
                   p["l1_ratio"], doc["grid"], doc["feature_names"])
