import numpy as np
import pytest

from survkit import Dataset
from survkit.models import AalenConfig, SingularDesign, fit_aalen, nelson_aalen


def test_intercept_only_equals_nelson_aalen():
    rng = np.random.default_rng(2)
    n = 60
    times = rng.uniform(0.5, 12, n)
    events = rng.random(n) < 0.7
    if not events.any():
        events[0] = True
    ds = Dataset(np.zeros((n, 0)), times, events)
    model = fit_aalen(ds)
    grid, chf = nelson_aalen(times, events)
    assert np.array_equal(model.training_grid, grid)
    assert np.allclose(model.cumulative_coefficients[:, 0], chf, atol=1e-12)


def test_single_event_intercept_jump():
    # one event among n at t1: least squares on the all-ones design gives
    # an increment of exactly 1/n
    n = 7
    times = np.concatenate([[1.0], np.full(n - 1, 9.0)])
    events = np.concatenate([[True], np.zeros(n - 1, dtype=bool)])
    ds = Dataset(np.zeros((n, 0)), times, events)
    model = fit_aalen(ds)
    assert model.cumulative_coefficients[0, 0] == pytest.approx(1.0 / n)


def test_large_penalizer_recovers_intercept_only():
    rng = np.random.default_rng(4)
    n = 80
    X = rng.standard_normal((n, 3))
    times = rng.uniform(0.5, 10, n)
    events = rng.random(n) < 0.8
    if not events.any():
        events[0] = True
    ds = Dataset(X, times, events)
    model = fit_aalen(ds, AalenConfig(penalizer=1e12))
    grid, chf = nelson_aalen(times, events)
    assert np.allclose(model.cumulative_coefficients[:, 1:], 0.0, atol=1e-6)
    assert np.allclose(model.cumulative_coefficients[:, 0], chf, atol=1e-4)


def test_singular_design_raises_without_penalizer():
    # duplicated column: rank-deficient at the first event time
    n = 20
    col = np.random.default_rng(5).standard_normal(n)
    X = np.column_stack([col, col])
    ds = Dataset(X, np.arange(1, n + 1).astype(float),
                 np.ones(n, dtype=bool))
    with pytest.raises(SingularDesign):
        fit_aalen(ds)
    fit_aalen(ds, AalenConfig(penalizer=0.1))  # penalized fit succeeds


def test_estimation_freezes_when_risk_set_degenerates():
    # with d=3, late event times have fewer than d+1 subjects at risk;
    # the unpenalized increments freeze there instead of exploding
    rng = np.random.default_rng(6)
    n = 30
    X = rng.standard_normal((n, 3))
    ds = Dataset(X, np.arange(1, n + 1).astype(float),
                 np.ones(n, dtype=bool))
    model = fit_aalen(ds)
    tail = model.cumulative_coefficients[-1]
    prev = model.cumulative_coefficients[-2]
    assert np.allclose(tail, prev)  # frozen increments at the end


def test_curves_are_valid_and_risk_oriented():
    rng = np.random.default_rng(7)
    n = 120
    X = rng.standard_normal((n, 2))
    beta = np.array([1.0, 0.0])
    times = np.maximum(rng.exponential(1.0, n) * np.exp(-X @ beta), 1e-6)
    ds = Dataset(X, times, np.ones(n, dtype=bool))
    model = fit_aalen(ds, AalenConfig(penalizer=1e-3))
    hi = np.array([1.5, 0.0])   # high hazard, short life
    lo = np.array([-1.5, 0.0])
    c_hi = model.predict_survival(hi)
    assert np.all(np.diff(c_hi.values) <= 1e-12)
    assert np.all((c_hi.values >= 0) & (c_hi.values <= 1))
    assert model.predict_risk(hi) > model.predict_risk(lo)


def test_serialization_round_trip():
    rng = np.random.default_rng(8)
    n = 50
    ds = Dataset(rng.standard_normal((n, 2)), rng.uniform(0.5, 5, n),
                 np.ones(n, dtype=bool))
    model = fit_aalen(ds, AalenConfig(penalizer=0.01))
    import json
    from survkit.models import model_from_dict
    clone = model_from_dict(json.loads(json.dumps(model.to_dict())))
    x = ds.covariates[0]
    assert np.allclose(clone.predict_survival(x).values,
                       model.predict_survival(x).values)
