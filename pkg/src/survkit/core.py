"""Data model for right-censored time-to-event data.

A subject is a covariate vector together with an observed time and an
event indicator: the indicator is True when the event was observed at
that time and False when the subject was censored, in which case the
observed time is only a lower bound on the true event time.

Predictions are right-continuous step functions ``t -> S(t | x)`` on a
time grid (:class:`SurvivalCurve`).  Every curve produced anywhere in
this package satisfies the same invariants: values lie in [0, 1], are
non-increasing along the grid, and evaluate to 1 before the first grid
point (everybody is alive at time zero).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class SurvKitError(Exception):
    """Base class for errors raised by this package."""


class NonFiniteValue(SurvKitError):
    """A covariate or time is NaN or infinite."""


class NegativeTime(SurvKitError):
    """An observed time is negative."""


class DimensionMismatch(SurvKitError):
    """Covariate dimensions disagree."""


class AllCensored(SurvKitError):
    """No subject has an observed event; nothing can be fit or scored."""


@dataclass(frozen=True, eq=False)
class Subject:
    """One observation: covariates, observed time, event indicator."""

    covariates: np.ndarray
    observed_time: float
    event: bool

    def __post_init__(self):
        object.__setattr__(self, "covariates",
                           np.asarray(self.covariates, dtype=float))
        object.__setattr__(self, "observed_time", float(self.observed_time))
        object.__setattr__(self, "event", bool(self.event))


class Dataset:
    """An immutable collection of subjects with a shared covariate dimension.

    Parameters
    ----------
    covariates : array-like, shape (n, d)
    times : array-like, shape (n,)
        Nonnegative observed times (event or censoring, per ``events``).
    events : array-like, shape (n,)
        Boolean event indicators; True means the event was observed.
    feature_names : sequence of str, optional
        Defaults to ``x0 .. x{d-1}``.

    Raises
    ------
    NonFiniteValue, NegativeTime, DimensionMismatch, AllCensored
    """

    def __init__(self, covariates, times, events, feature_names=None):
        X = np.atleast_2d(np.asarray(covariates, dtype=float))
        t = np.asarray(times, dtype=float).ravel()
        e = np.asarray(events, dtype=bool).ravel()
        if X.shape[0] != t.shape[0] or t.shape[0] != e.shape[0]:
            raise DimensionMismatch(
                f"got {X.shape[0]} covariate rows, {t.shape[0]} times, "
                f"{e.shape[0]} event flags")
        if t.shape[0] == 0:
            raise DimensionMismatch("dataset is empty")
        if not np.all(np.isfinite(X)):
            row = int(np.where(~np.isfinite(X).all(axis=1))[0][0])
            raise NonFiniteValue(f"non-finite covariate in row {row}")
        if not np.all(np.isfinite(t)):
            row = int(np.where(~np.isfinite(t))[0][0])
            raise NonFiniteValue(f"non-finite observed time in row {row}")
        if np.any(t < 0):
            row = int(np.where(t < 0)[0][0])
            raise NegativeTime(f"negative observed time in row {row}: {t[row]}")
        if not e.any():
            raise AllCensored("every subject is censored")
        if feature_names is None:
            feature_names = tuple(f"x{j}" for j in range(X.shape[1]))
        else:
            feature_names = tuple(str(f) for f in feature_names)
            if len(feature_names) != X.shape[1]:
                raise DimensionMismatch(
                    f"{len(feature_names)} feature names for {X.shape[1]} columns")
        for arr in (X, t, e):
            arr.setflags(write=False)
        self.covariates = X
        self.times = t
        self.events = e
        self.feature_names = feature_names

    @property
    def n(self) -> int:
        return self.times.shape[0]

    @property
    def d(self) -> int:
        return self.covariates.shape[1]

    def __len__(self) -> int:
        return self.n

    @property
    def censor_rate(self) -> float:
        return float(1.0 - self.events.mean())

    def subject(self, i: int) -> Subject:
        return Subject(self.covariates[i], self.times[i], self.events[i])

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset(self.covariates[idx], self.times[idx],
                       self.events[idx], self.feature_names)

    def __repr__(self):
        return (f"Dataset(n={self.n}, d={self.d}, "
                f"censored={self.censor_rate:.1%})")


def validate_dataset(rows, feature_names=None) -> Dataset:
    """Build a :class:`Dataset` from raw ``(covariates, time, event)`` rows.

    Reports the offending row index in the error message when a row is
    malformed.  Rows may be tuples, lists, or :class:`Subject` instances.
    """
    covs, times, events = [], [], []
    d = None
    for i, row in enumerate(rows):
        if isinstance(row, Subject):
            x, t, e = row.covariates, row.observed_time, row.event
        else:
            x, t, e = row
        x = np.asarray(x, dtype=float).ravel()
        if d is None:
            d = x.shape[0]
        elif x.shape[0] != d:
            raise DimensionMismatch(
                f"row {i} has {x.shape[0]} covariates, expected {d}")
        covs.append(x)
        times.append(t)
        events.append(e)
    if not covs:
        raise DimensionMismatch("no rows")
    return Dataset(np.vstack(covs), times, events, feature_names)


@dataclass(frozen=True, eq=False)
class SurvivalCurve:
    """A right-continuous step function ``t -> S(t)`` on a time grid.

    ``values[k]`` is the survival probability on ``[times[k], times[k+1])``;
    the curve is 1 before ``times[0]`` and stays at ``values[-1]`` beyond
    the grid (flat extrapolation).
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).ravel()
        v = np.asarray(self.values, dtype=float).ravel()
        if t.shape != v.shape:
            raise DimensionMismatch(
                f"{t.shape[0]} grid times but {v.shape[0]} values")
        if t.shape[0] == 0:
            raise DimensionMismatch("empty curve")
        if not np.all(np.isfinite(t)) or not np.all(np.isfinite(v)):
            raise NonFiniteValue("curve contains non-finite entries")
        if np.any(t < 0):
            raise NegativeTime("curve grid contains negative times")
        if np.any(np.diff(t) <= 0):
            raise SurvKitError("curve grid must be strictly increasing")
        if np.any(v < -1e-12) or np.any(v > 1 + 1e-12):
            raise SurvKitError("curve values must lie in [0, 1]")
        if np.any(np.diff(v) > 1e-12):
            raise SurvKitError("curve values must be non-increasing")
        v = np.clip(v, 0.0, 1.0)
        for arr in (t, v):
            arr.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __call__(self, t):
        return survival_at(self, t)


def survival_at(curve: SurvivalCurve, t):
    """Evaluate a curve at ``t`` (scalar or array), right-continuously.

    Returns the value at the largest grid time <= t, 1 before the first
    grid time, and the last value beyond the grid.
    """
    t = np.asarray(t, dtype=float)
    idx = np.searchsorted(curve.times, t, side="right") - 1
    out = np.where(idx < 0, 1.0, curve.values[np.maximum(idx, 0)])
    if t.ndim == 0:
        return float(out)
    return out


def survival_before(curve: SurvivalCurve, t):
    """Left limit ``S(t-)``: the value at the largest grid time < t."""
    t = np.asarray(t, dtype=float)
    idx = np.searchsorted(curve.times, t, side="left") - 1
    out = np.where(idx < 0, 1.0, curve.values[np.maximum(idx, 0)])
    if t.ndim == 0:
        return float(out)
    return out


def step_interpolate(src_times, src_values, grid):
    """Re-evaluate a step function (same convention as ``survival_at``)
    onto a new grid.  Vectorized over ``grid``."""
    src_times = np.asarray(src_times, dtype=float)
    src_values = np.asarray(src_values, dtype=float)
    idx = np.searchsorted(src_times, grid, side="right") - 1
    return np.where(idx < 0, 1.0, src_values[np.maximum(idx, 0)])


def risk_set(dataset: Dataset, t: float) -> np.ndarray:
    """Indices of subjects still at risk strictly after ``t``:
    ``{i : y_i > t}``."""
    return np.flatnonzero(dataset.times > t)


def restricted_mean(curve: SurvivalCurve) -> float:
    """Integral of the curve over [0, last grid time].

    Exact for the step representation: the curve is 1 on [0, times[0])
    and constant between grid points.  Used as a restricted mean event
    time; the unrestricted mean is undefined when the curve does not
    reach zero.
    """
    t = curve.times
    v = curve.values
    total = float(t[0])
    if t.shape[0] > 1:
        total += float(np.sum(v[:-1] * np.diff(t)))
    return total
