"""Convex aggregation of survival models on the probability simplex.

The aggregate prediction is ``S(t|x) = sum_k lambda_k S_k(t|x)`` with
nonnegative weights summing to one.  The weights minimize the integrated
Brier score on a held-out aggregation split via exponentiated gradient
descent: starting from the uniform point, each iteration multiplies
every weight by ``exp(-eta * dIBS/dlambda_k)`` and renormalizes.  The
objective is quadratic (hence convex) in the weights, which is what
makes gradient descent appropriate here; the concordance index has no
such structure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, DimensionMismatch, SurvKitError, SurvivalCurve
from .scoring import (CensoringEstimate, ZeroCensoringProbability,
                      default_horizon, km_censoring)
from .models import FittedModel, ModelSpec, fit_model


class GridMismatch(SurvKitError):
    """Component predictions do not share the expected grid/horizon."""


class NonFiniteGradient(SurvKitError):
    """A gradient entry is NaN or infinite."""


class DivergedObjective(SurvKitError):
    """The objective increased for many consecutive iterations; the
    learning rate is too large."""


@dataclass(frozen=True, eq=False)
class EnsembleWeights:
    """A point on the K-simplex."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.shape[0] < 1:
            raise SurvKitError("weights are empty")
        if np.any(v < 0):
            raise SurvKitError("weights must be nonnegative")
        if abs(v.sum() - 1.0) > 1e-12:
            raise SurvKitError(f"weights sum to {v.sum()!r}, not 1")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def uniform(cls, k: int) -> "EnsembleWeights":
        return cls(np.full(k, 1.0 / k))

    @property
    def k(self) -> int:
        return self.values.shape[0]


@dataclass(eq=False)
class ComponentPredictions:
    """Survival evaluations of K components on a shared grid.

    ``curves`` has shape (K, n, G): model k evaluated for subject i at
    grid point g.  The grid is the union of the component grids and the
    dataset's observed times, restricted to [0, tau] with 0 and tau
    appended, so pointwise combination needs no interpolation and the
    quadrature matches the scoring module's.
    """

    curves: np.ndarray
    grid: np.ndarray
    tau: float

    def __post_init__(self):
        if self.curves.ndim != 3:
            raise GridMismatch("expected a (K, n, G) array")
        if self.curves.shape[2] != self.grid.shape[0]:
            raise GridMismatch("curves and grid disagree on G")
        if np.any(self.curves < -1e-12) or np.any(self.curves > 1 + 1e-12):
            raise SurvKitError("component evaluations must lie in [0, 1]")


def component_predictions(models, dataset: Dataset,
                          tau: float) -> ComponentPredictions:
    """Evaluate fitted models for every subject on the shared grid."""
    knots = [np.asarray([0.0, tau]), dataset.times]
    for m in models:
        knots.append(m.training_grid)
    grid = np.unique(np.concatenate(knots))
    grid = grid[(grid >= 0.0) & (grid <= tau)]
    X = dataset.covariates
    curves = np.stack([m.predict_survival_matrix(X, grid) for m in models])
    return ComponentPredictions(np.clip(curves, 0.0, 1.0), grid, float(tau))


def _ipcw_weight_matrix(dataset: Dataset, grid, censor: CensoringEstimate):
    from .scoring import _brier_on_grid  # noqa: F401  (shares conventions)
    from .core import step_interpolate, survival_before

    times, events = dataset.times, dataset.events
    g_left = survival_before(censor.curve, times)
    g_grid = step_interpolate(censor.curve.times, censor.curve.values, grid)
    alive = times[:, None] > grid[None, :]
    died = events[:, None] & ~alive
    if np.any(died & (g_left[:, None] == 0.0)) or np.any(
            alive & (g_grid[None, :] == 0.0)):
        raise ZeroCensoringProbability(
            "censoring survival is 0 where a weight is required")
    w = np.zeros(alive.shape)
    np.divide(1.0, np.broadcast_to(g_left[:, None], alive.shape),
              out=w, where=died)
    np.divide(1.0, np.broadcast_to(g_grid[None, :], alive.shape),
              out=w, where=alive)
    return w, alive.astype(float)


def ensemble_ibs(weights: EnsembleWeights, preds: ComponentPredictions,
                 dataset: Dataset, censor: CensoringEstimate) -> float:
    """Integrated Brier score of the weighted aggregate."""
    w_ipcw, alive = _ipcw_weight_matrix(dataset, preds.grid, censor)
    agg = np.tensordot(weights.values, preds.curves, axes=(0, 0))
    bs = np.mean(w_ipcw * (alive - agg) ** 2, axis=0)
    dt = np.diff(preds.grid)
    return float(np.sum(bs[:-1] * dt) / preds.tau)


def ibs_gradient(weights: EnsembleWeights, preds: ComponentPredictions,
                 dataset: Dataset, censor: CensoringEstimate,
                 tau: float | None = None) -> np.ndarray:
    """Partial derivatives of the aggregate IBS in each weight.

    d IBS / d lambda_j = (1/(tau n)) sum_i  int_0^tau W_i(t)
        * 2 (1{y_i > t} - sum_k lambda_k S_k(t|x_i)) * (-S_j(t|x_i)) dt.
    """
    if tau is not None and abs(tau - preds.tau) > 1e-12:
        raise GridMismatch(f"tau={tau} but predictions built for {preds.tau}")
    if weights.k != preds.curves.shape[0]:
        raise GridMismatch(f"{weights.k} weights for "
                           f"{preds.curves.shape[0]} components")
    if dataset.n != preds.curves.shape[1]:
        raise GridMismatch("predictions were built for a different dataset")
    w_ipcw, alive = _ipcw_weight_matrix(dataset, preds.grid, censor)
    agg = np.tensordot(weights.values, preds.curves, axes=(0, 0))  # (n, G)
    core = w_ipcw * 2.0 * (alive - agg)  # (n, G)
    dt = np.diff(preds.grid)
    # integrate the step integrand, then average over subjects
    integrand = -core[None, :, :] * preds.curves  # (K, n, G)
    integrals = np.sum(integrand[:, :, :-1] * dt[None, None, :], axis=2)
    grad = integrals.mean(axis=1) / preds.tau
    if not np.all(np.isfinite(grad)):
        raise NonFiniteGradient("gradient has non-finite entries")
    return grad


def _quadratic_form(preds: ComponentPredictions, dataset: Dataset,
                    censor: CensoringEstimate):
    """Represent IBS(lambda) = l'Ql - 2 b'l + c once.

    The aggregate IBS is quadratic in the weights, so the whole descent
    only needs the (K, K) Gram matrix of the components under the
    IPCW-and-quadrature inner product.  Matches ``ensemble_ibs`` and
    ``ibs_gradient`` exactly (same grid, same step quadrature).
    """
    w_ipcw, alive = _ipcw_weight_matrix(dataset, preds.grid, censor)
    dt = np.diff(preds.grid)
    n = dataset.n
    qw = w_ipcw[:, :-1] * dt[None, :] / (preds.tau * n)  # (n, G-1)
    S = preds.curves[:, :, :-1]
    ind = alive[:, :-1]
    Q = np.einsum("kng,lng,ng->kl", S, S, qw)
    b = np.einsum("kng,ng->k", S, qw * ind)
    c = float(np.sum(qw * ind))  # ind is 0/1 so ind^2 = ind
    return Q, b, c


def eg_step(weights: EnsembleWeights, gradient,
            eta: float) -> EnsembleWeights:
    """One multiplicative update: lambda_k <- lambda_k e^{-eta g_k} / Z."""
    g = np.asarray(gradient, dtype=float).ravel()
    if not np.all(np.isfinite(g)):
        raise NonFiniteGradient("gradient has non-finite entries")
    if g.shape[0] != weights.k:
        raise DimensionMismatch(f"{g.shape[0]} gradient entries for "
                                f"{weights.k} weights")
    # factor out the largest exponent so Z never overflows
    expo = -eta * g
    unnorm = weights.values * np.exp(expo - expo.max())
    return EnsembleWeights(unnorm / unnorm.sum())


@dataclass
class EnsembleConfig:
    eta: float = 0.1
    max_iter: int = 10000
    stop_tol: float = 1e-8
    tau: float | None = None  # default: 95th percentile of observed times
    folds: int = 5

    def validate(self):
        if self.eta <= 0 or self.max_iter < 1 or self.stop_tol < 0:
            raise SurvKitError("eta > 0, max_iter >= 1, stop_tol >= 0 required")


class EnsembleModel(FittedModel):
    """Fitted convex combination of component models."""

    kind = "ensemble"

    def __init__(self, components, weights: EnsembleWeights, trace,
                 feature_names):
        grid = np.unique(np.concatenate([m.training_grid
                                         for m in components]))
        super().__init__(grid, feature_names)
        self.components = list(components)
        self.weights = weights
        self.trace = np.asarray(trace, dtype=float)

    def predict_survival(self, subject, times=None) -> SurvivalCurve:
        x = self._covariates(subject)
        grid = self.training_grid if times is None else np.asarray(times, float)
        total = np.zeros(grid.shape[0])
        for lam, m in zip(self.weights.values, self.components):
            total += lam * m.predict_survival_matrix(x.reshape(1, -1), grid)[0]
        return SurvivalCurve(grid, np.clip(total, 0.0, 1.0))

    def predict_risk(self, subject) -> float:
        # convex combination of curves, summarized like the additive
        # models: negated restricted mean of the aggregate curve
        from .core import restricted_mean
        return -restricted_mean(self.predict_survival(subject))

    def predict_survival_matrix(self, X, grid) -> np.ndarray:
        total = np.zeros((np.atleast_2d(X).shape[0], len(grid)))
        for lam, m in zip(self.weights.values, self.components):
            total += lam * m.predict_survival_matrix(X, grid)
        return np.clip(total, 0.0, 1.0)

    def predict_risk_many(self, X) -> np.ndarray:
        grid = self.training_grid
        matrix = self.predict_survival_matrix(X, grid)
        lead = grid[0]
        widths = np.diff(grid)
        means = lead + matrix[:, :-1] @ widths
        return -means

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "feature_names": list(self.feature_names),
            "parameters": {
                "weights": self.weights.values.tolist(),
                "components": [m.to_dict() for m in self.components],
            },
            "grid": self.training_grid.tolist(),
            "trace": self.trace.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EnsembleModel":
        from .models import model_from_dict
        comps = [model_from_dict(d) for d in doc["parameters"]["components"]]
        return cls(comps, EnsembleWeights(np.asarray(
            doc["parameters"]["weights"])), doc.get("trace", []),
            doc["feature_names"])


def predict_ensemble(model: EnsembleModel, subject) -> SurvivalCurve:
    """Pointwise convex combination of the component curves."""
    return model.predict_survival(subject)


def fit_ensemble(components, dataset: Dataset,
                 config: EnsembleConfig | None = None) -> EnsembleModel:
    """Optimize the weights on a held-out aggregation split.

    Runs exponentiated gradient descent from the uniform point with a
    constant learning rate until ``max_iter`` or until the weights move
    less than ``stop_tol`` in max-norm.  Records the objective at every
    iterate and returns the best iterate seen, which is the last one
    whenever the descent behaves.

    Raises
    ------
    DivergedObjective
        If the objective increases for 50 consecutive iterations.
    """
    config = config or EnsembleConfig()
    config.validate()
    components = list(components)
    if len(components) < 2:
        raise SurvKitError("an ensemble needs at least two components")
    tau = config.tau if config.tau is not None else default_horizon(dataset)
    censor = km_censoring(dataset)
    preds = component_predictions(components, dataset, tau)
    Q, b, c = _quadratic_form(preds, dataset, censor)

    def objective(lam):
        return float(lam @ Q @ lam - 2.0 * b @ lam + c)

    weights = EnsembleWeights.uniform(len(components))
    best_weights = weights
    best_obj = objective(weights.values)
    trace = [best_obj]
    rising = 0
    for _ in range(config.max_iter):
        grad = 2.0 * (Q @ weights.values - b)
        new_weights = eg_step(weights, grad, config.eta)
        obj = objective(new_weights.values)
        trace.append(obj)
        if obj > trace[-2]:
            rising += 1
            if rising >= 50:
                raise DivergedObjective(
                    "objective rose for 50 consecutive iterations; "
                    f"eta={config.eta} is too large")
        else:
            rising = 0
        if obj < best_obj:
            best_obj = obj
            best_weights = new_weights
        delta = np.max(np.abs(new_weights.values - weights.values))
        weights = new_weights
        if delta < config.stop_tol:
            break
    return EnsembleModel(components, best_weights, trace,
                         components[0].feature_names)


def fit_ensemble_cv(specs, dataset: Dataset,
                    config: EnsembleConfig | None = None,
                    seed: int = 0) -> EnsembleModel:
    """Five-fold weight estimation.

    Components are refit on each fold's complement and the weights
    optimized on the held-out fifth; the final weights are the mean of
    the fold weights (a simplex point again), paired with components
    refit on the full dataset.
    """
    from .bench.splits import stratified_folds

    config = config or EnsembleConfig()
    specs = [s if isinstance(s, ModelSpec) else ModelSpec(s) for s in specs]
    folds = stratified_folds(dataset, config.folds, seed)
    fold_weights = []
    traces = []
    for holdout in folds:
        rest = np.setdiff1d(np.arange(dataset.n), holdout)
        train_part = dataset.subset(rest)
        agg_part = dataset.subset(holdout)
        comps = [fit_model(s.kind, train_part, s.build_config())
                 for s in specs]
        fitted = fit_ensemble(comps, agg_part, config)
        fold_weights.append(fitted.weights.values)
        traces.append(fitted.trace)
    mean_weights = EnsembleWeights(np.mean(fold_weights, axis=0))
    final_components = [fit_model(s.kind, dataset, s.build_config())
                        for s in specs]
    model = EnsembleModel(final_components, mean_weights,
                          np.concatenate(traces), dataset.feature_names)
    model.fold_weights = np.asarray(fold_weights)
    return model
