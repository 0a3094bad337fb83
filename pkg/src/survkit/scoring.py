"""Censoring-aware evaluation of survival predictions.

Two scores are provided.  The concordance index measures ranking: the
fraction of eligible subject pairs whose predicted risk ordering matches
their observed time ordering.  The Brier score measures calibration at a
time point t: an inverse-probability-of-censoring weighted (IPCW) squared
error between the survival status indicator and the predicted survival
probability, with the censoring survival function estimated by a
Kaplan-Meier product-limit estimator applied to the censoring times.
The integrated Brier score averages the Brier score over [0, tau].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (Dataset, DimensionMismatch, SurvKitError, SurvivalCurve,
                   step_interpolate, survival_at, survival_before)


class NoEligiblePairs(SurvKitError):
    """No pair of subjects can be ordered (all times tied, or every
    earlier time is censored)."""


class ZeroCensoringProbability(SurvKitError):
    """An IPCW weight requires dividing by a zero censoring-survival
    estimate; the requested horizon is beyond the identifiable range."""


@dataclass(frozen=True)
class CensoringEstimate:
    """Kaplan-Meier estimate of the censoring survival function S_C.

    Covariate-free: the same curve is used for every subject.
    """

    curve: SurvivalCurve


def _product_limit(times, flags):
    """Product-limit estimator treating ``flags`` as the event of interest.

    Returns (grid, values) where the grid holds the distinct times at
    which at least one flagged event occurs and values the estimate
    S(t) = prod_{t_k <= t} (1 - d_k / n_k), with n_k = #{y_i >= t_k}.
    """
    times = np.asarray(times, dtype=float)
    flags = np.asarray(flags, dtype=bool)
    order = np.argsort(times, kind="stable")
    t_sorted = times[order]
    f_sorted = flags[order]
    n = times.shape[0]

    grid_times, grid_values = [], []
    surv = 1.0
    i = 0
    while i < n:
        j = i
        d = 0
        while j < n and t_sorted[j] == t_sorted[i]:
            d += int(f_sorted[j])
            j += 1
        if d > 0:
            at_risk = n - i
            surv *= 1.0 - d / at_risk
            grid_times.append(t_sorted[i])
            grid_values.append(surv)
        i = j
    if not grid_times:
        # no flagged events at all: the estimate is identically 1
        grid_times = [float(t_sorted[-1])]
        grid_values = [1.0]
    return np.asarray(grid_times), np.asarray(grid_values)


def km_survival(dataset: Dataset) -> SurvivalCurve:
    """Kaplan-Meier estimate of the event survival function."""
    t, v = _product_limit(dataset.times, dataset.events)
    return SurvivalCurve(t, v)


def km_censoring(dataset: Dataset) -> CensoringEstimate:
    """Kaplan-Meier estimate of the censoring survival function.

    Censorings play the role of events: S_C(t) = prod (1 - c_k / n_k)
    over censoring times t_k <= t, with n_k the subjects still under
    observation (y_i >= t_k).
    """
    t, v = _product_limit(dataset.times, ~dataset.events)
    return CensoringEstimate(SurvivalCurve(t, v))


def eligible_pairs(dataset: Dataset) -> np.ndarray:
    """All unordered pairs (i, j) that the concordance index may score.

    A pair is eligible when the times differ and the subject with the
    earlier time had an observed event.  Returned as an (m, 2) array
    with the earlier-time subject first.
    """
    times, events = dataset.times, dataset.events
    pairs = []
    for i in range(dataset.n):
        if not events[i]:
            continue
        later = np.flatnonzero(times > times[i])
        pairs.extend((i, int(j)) for j in later)
    return np.asarray(pairs, dtype=int).reshape(-1, 2)


def concordance_index(risks, dataset: Dataset) -> float:
    """Fraction of eligible pairs ordered correctly by the risk scores.

    A pair counts 1 when the earlier-time subject has strictly higher
    risk, 0.5 when the risks are tied, 0 otherwise.  Pairs with tied
    times are excluded, as are pairs whose earlier time is censored.

    Parameters
    ----------
    risks : array-like, shape (n,)
        One mortality-risk score per subject; only the ranking matters.
    dataset : Dataset

    Raises
    ------
    NoEligiblePairs
        When no pair is eligible.
    """
    risks = np.asarray(risks, dtype=float).ravel()
    if risks.shape[0] != dataset.n:
        raise DimensionMismatch(
            f"got {risks.shape[0]} risks for {dataset.n} subjects")
    times, events = dataset.times, dataset.events
    order = np.argsort(times, kind="stable")
    numer2 = 0  # concordant pairs counted in halves, kept integral
    total = 0
    i = 0
    n = dataset.n
    while i < n:
        j = i
        while j < n and times[order[j]] == times[order[i]]:
            j += 1
        later = order[j:]
        if later.size:
            for k in range(i, j):
                idx = order[k]
                if not events[idx]:
                    continue
                diff = risks[idx] - risks[later]
                numer2 += 2 * int(np.count_nonzero(diff > 0))
                numer2 += int(np.count_nonzero(diff == 0))
                total += later.size
        i = j
    if total == 0:
        raise NoEligiblePairs("no eligible pairs to score")
    return numer2 / (2.0 * total)


def _ipcw_weights(dataset: Dataset, t, censor: CensoringEstimate):
    """IPCW weight W_i(t) for every subject at one time point.

    W_i(t) = d_i 1{y_i <= t} / S_C(y_i-) + 1{y_i > t} / S_C(t).
    The first term evaluates the censoring survival just before y_i so a
    subject's own censoring event cannot deflate its weight.  Subjects
    censored at or before t get weight 0.
    """
    times, events = dataset.times, dataset.events
    g_left = survival_before(censor.curve, times)
    g_t = survival_at(censor.curve, t)
    died = events & (times <= t)
    alive = times > t
    if np.any(died & (g_left == 0.0)) or (np.any(alive) and g_t == 0.0):
        raise ZeroCensoringProbability(
            f"censoring survival is 0 where a weight is required at t={t}")
    w = np.zeros(dataset.n)
    w[died] = 1.0 / g_left[died]
    if np.any(alive):
        w[alive] = 1.0 / g_t
    return w


def brier_score(predictions, dataset: Dataset, t: float,
                censor: CensoringEstimate) -> float:
    """IPCW-weighted squared error at time ``t``.

    BS(t) = (1/n) sum_i W_i(t) (1{y_i > t} - S(t | x_i))^2.

    Parameters
    ----------
    predictions : sequence of SurvivalCurve, one per subject.
    t : float, nonnegative evaluation time.
    censor : CensoringEstimate for the IPCW weights.
    """
    if t < 0:
        raise SurvKitError(f"evaluation time must be nonnegative, got {t}")
    s_t = np.array([survival_at(c, t) for c in predictions])
    w = _ipcw_weights(dataset, t, censor)
    alive = (dataset.times > t).astype(float)
    return float(np.mean(w * (alive - s_t) ** 2))


def default_horizon(dataset: Dataset, quantile: float = 0.95) -> float:
    """Default integration horizon: a high quantile of the observed
    times, avoiding the unstable Kaplan-Meier tail."""
    return float(np.quantile(dataset.times, quantile))


def integration_grid(dataset: Dataset, curves, tau: float) -> np.ndarray:
    """Quadrature grid on [0, tau]: the sorted union of the observed
    times, all curve knots, 0, and tau.  The Brier score is piecewise
    constant between these points."""
    knots = [np.asarray([0.0, tau]), dataset.times]
    for c in curves:
        knots.append(c.times)
    grid = np.unique(np.concatenate(knots))
    return grid[(grid >= 0.0) & (grid <= tau)]


def _integrate_step(values_on_grid, grid):
    """Integrate a right-continuous step function given its values at
    its own knots: each value holds on [grid[k], grid[k+1])."""
    return float(np.sum(values_on_grid[:-1] * np.diff(grid)))


def curve_matrix(curves, grid) -> np.ndarray:
    """Evaluate curves (one per subject) on a shared grid: (n, G)."""
    return np.vstack([step_interpolate(c.times, c.values, grid)
                      for c in curves])


def _brier_on_grid(pred_matrix, dataset: Dataset, grid,
                   censor: CensoringEstimate) -> np.ndarray:
    """Brier score at every grid point, vectorized: (G,)."""
    times, events = dataset.times, dataset.events
    g_left = survival_before(censor.curve, times)  # (n,)
    g_grid = step_interpolate(censor.curve.times, censor.curve.values, grid)
    alive = times[:, None] > grid[None, :]  # (n, G)
    died = events[:, None] & ~alive
    if np.any(died & (g_left[:, None] == 0.0)):
        raise ZeroCensoringProbability(
            "censoring survival is 0 at an observed event time")
    if np.any(alive & (g_grid[None, :] == 0.0)):
        raise ZeroCensoringProbability(
            "censoring survival is 0 inside the integration range")
    w = np.zeros(alive.shape)
    np.divide(1.0, np.broadcast_to(g_left[:, None], alive.shape),
              out=w, where=died)
    np.divide(1.0, np.broadcast_to(g_grid[None, :], alive.shape),
              out=w, where=alive)
    sq = (alive.astype(float) - pred_matrix) ** 2
    return np.mean(w * sq, axis=0)


def integrated_brier_score(predictions, dataset: Dataset, tau: float,
                           censor: CensoringEstimate) -> float:
    """Time-averaged Brier score over [0, tau].

    IBS = (1/tau) int_0^tau BS(t) dt, integrated exactly for the
    piecewise-constant integrand on the union grid of observed times
    and curve knots.

    Raises
    ------
    ZeroCensoringProbability
        When tau reaches beyond the identifiable range of the censoring
        estimate.
    """
    if tau <= 0:
        raise SurvKitError(f"horizon must be positive, got {tau}")
    grid = integration_grid(dataset, predictions, tau)
    pred = curve_matrix(predictions, grid)
    bs = _brier_on_grid(pred, dataset, grid, censor)
    return _integrate_step(bs, grid) / tau
