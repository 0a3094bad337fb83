"""Cox proportional hazards regression.

The hazard is modeled as ``h(t | x) = l0(t) * exp(beta' x)`` with an
unspecified baseline ``l0``.  ``beta`` maximizes the ridge-penalized log
partial likelihood (Breslow convention for tied event times) by
Newton-Raphson with step halving; the baseline cumulative hazard is then
estimated with the Breslow estimator.  The mortality risk is the log
hazard ratio ``beta' x``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Dataset, SurvKitError, SurvivalCurve
from .base import FittedModel, NonConvergence, RelativeRiskModel, breslow_baseline


class SeparationDetected(SurvKitError):
    """The partial likelihood is monotone in some direction (a covariate
    perfectly orders the event times) and beta diverges; add a ridge
    penalty to regularize."""


@dataclass
class CoxConfig:
    ridge_alpha: float = 0.0
    max_iter: int = 100
    tol: float = 1e-6

    def validate(self):
        if self.ridge_alpha < 0:
            raise SurvKitError("ridge_alpha must be nonnegative")
        if self.max_iter < 1:
            raise SurvKitError("max_iter must be positive")


# a per-sd log hazard ratio beyond this means the likelihood is monotone
# (perfect ordering) and the unpenalized MLE sits at infinity
_DIVERGENCE_BOUND = 8.0


def _pll_derivatives(X, times, events, beta):
    """Log partial likelihood with gradient and Hessian at ``beta``.

    Iterates tie groups from the latest time backwards, maintaining the
    risk-set sums S0 = sum e^eta, S1 = sum x e^eta, S2 = sum x x' e^eta.
    """
    n, d = X.shape
    eta = X @ beta
    shift = eta.max()
    w = np.exp(eta - shift)
    order = np.argsort(times, kind="stable")

    loglik = 0.0
    grad = np.zeros(d)
    hess = np.zeros((d, d))
    s0 = 0.0
    s1 = np.zeros(d)
    s2 = np.zeros((d, d))

    i = n - 1
    while i >= 0:
        j = i
        t_i = times[order[i]]
        while j >= 0 and times[order[j]] == t_i:
            idx = order[j]
            s0 += w[idx]
            xw = w[idx] * X[idx]
            s1 += xw
            s2 += np.outer(xw, X[idx])
            j -= 1
        d_k = 0
        for k in range(j + 1, i + 1):
            idx = order[k]
            if events[idx]:
                d_k += 1
                loglik += eta[idx]
                grad += X[idx]
        if d_k > 0:
            loglik -= d_k * (np.log(s0) + shift)
            mean = s1 / s0
            grad -= d_k * mean
            hess -= d_k * (s2 / s0 - np.outer(mean, mean))
        i = j
    return loglik, grad, hess


def fit_cox(dataset: Dataset, config: CoxConfig | None = None) -> "CoxModel":
    """Fit by penalized Newton-Raphson.

    Raises
    ------
    NonConvergence
        Gradient norm still above ``tol`` after ``max_iter`` iterations.
    SeparationDetected
        ``beta`` diverges (monotone likelihood) with no ridge penalty.
    """
    config = config or CoxConfig()
    config.validate()
    X = dataset.covariates
    times, events = dataset.times, dataset.events
    alpha = config.ridge_alpha
    d = dataset.d

    # scale-aware divergence guard: |beta_j| * sd(x_j) is the log hazard
    # ratio across one standard deviation, comparable across scalings
    covariate_sd = X.std(axis=0) if d else np.zeros(0)

    beta = np.zeros(d)
    loglik, grad, hess = _pll_derivatives(X, times, events, beta)
    objective = loglik - 0.5 * alpha * beta @ beta
    n_iter = 0
    for n_iter in range(1, config.max_iter + 1):
        if d and np.max(np.abs(beta) * covariate_sd) > _DIVERGENCE_BOUND:
            raise SeparationDetected(
                "a covariate orders the event times perfectly and beta "
                "diverges; set ridge_alpha > 0")
        grad_pen = grad - alpha * beta
        if np.max(np.abs(grad_pen)) <= config.tol:
            break
        neg_hess = -(hess - alpha * np.eye(d))
        step, *_ = np.linalg.lstsq(neg_hess, grad_pen, rcond=None)
        # a vanishing Newton decrement means the remaining gradient is
        # floating-point noise even when its norm sits just above tol
        if grad_pen @ step <= 1e-14 * max(1.0, abs(loglik)):
            break
        # step halving keeps the penalized objective increasing
        scale = 1.0
        for _ in range(40):
            candidate = beta + scale * step
            ll_new, g_new, h_new = _pll_derivatives(X, times, events, candidate)
            obj_new = ll_new - 0.5 * alpha * candidate @ candidate
            if np.isfinite(obj_new) and obj_new >= objective - 1e-12:
                beta, loglik, grad, hess = candidate, ll_new, g_new, h_new
                objective = obj_new
                break
            scale *= 0.5
        else:
            raise NonConvergence(
                f"no ascent direction after {n_iter} iterations")
    else:
        raise NonConvergence(
            f"gradient norm {np.max(np.abs(grad - alpha * beta)):.3g} "
            f"> tol after {config.max_iter} iterations")

    grid, cumhaz = breslow_baseline(times, events, X @ beta)
    return CoxModel(beta, alpha, grid, cumhaz, dataset.feature_names, n_iter)


class CoxModel(RelativeRiskModel):
    kind = "cox"

    def __init__(self, beta, ridge_alpha, training_grid, baseline_cumhaz,
                 feature_names, n_iter=0):
        super().__init__(training_grid, baseline_cumhaz, feature_names)
        self.beta = np.asarray(beta, dtype=float)
        self.ridge_alpha = float(ridge_alpha)
        self.n_iter = int(n_iter)

    def _linear_predictor(self, x):
        return float(self.beta @ x)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "feature_names": list(self.feature_names),
            "parameters": {
                "beta": self.beta.tolist(),
                "ridge_alpha": self.ridge_alpha,
            },
            "grid": self.training_grid.tolist(),
            "baseline_cumhaz": self.baseline_cumhaz.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CoxModel":
        p = doc["parameters"]
        return cls(p["beta"], p["ridge_alpha"], doc["grid"],
                   doc["baseline_cumhaz"], doc["feature_names"])
