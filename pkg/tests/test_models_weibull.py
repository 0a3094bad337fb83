import numpy as np
import pytest
from scipy import optimize

from survkit import Dataset
from survkit.models import (NonPositiveTime, WeibullAftConfig,
                            fit_weibull_aft)
from survkit.simulate import GeneratorSpec, gen_aft_style


def test_shape_recovery_on_simulated_data():
    spec = GeneratorSpec("aft_style", n=5000, d=1, censor_target=0.0, seed=2,
                         truth={"beta": [0.5], "beta0": 0.0, "shape": 2.0})
    ds, _ = gen_aft_style(spec)
    model = fit_weibull_aft(ds)
    assert 1.9 <= model.shape <= 2.1
    assert abs(model.beta[0] - 0.5) < 0.05


def _univariate_mle(times, events):
    """Independent numeric MLE for the plain two-parameter Weibull."""
    def nll(p):
        k, rho = np.exp(p)
        z = k * (np.log(times) - np.log(rho))
        return -np.sum(events * (np.log(k) + z - np.log(times)) - np.exp(z))

    best = None
    for start in ([0.0, 0.0], [0.5, 1.0], [-0.5, -1.0]):
        res = optimize.minimize(nll, start, method="Nelder-Mead",
                                options={"xatol": 1e-12, "fatol": 1e-14,
                                         "maxiter": 20000})
        if best is None or res.fun < best.fun:
            best = res
    return np.exp(best.x)  # (shape, scale)


def test_zero_covariates_match_univariate_oracle():
    rng = np.random.default_rng(7)
    n = 400
    times = 1.7 * rng.weibull(2.5, size=n)
    events = rng.random(n) < 0.8
    if not events.any():
        events[0] = True
    ds = Dataset(np.zeros((n, 0)), times, events)
    model = fit_weibull_aft(ds, WeibullAftConfig(tol=1e-14))
    shape_o, scale_o = _univariate_mle(times, events)
    assert model.shape == pytest.approx(shape_o, abs=1e-6)
    assert np.exp(model.beta0) == pytest.approx(scale_o, abs=1e-6)


def test_survival_is_one_at_zero():
    spec = GeneratorSpec("aft_style", n=200, d=2, censor_target=0.3, seed=4)
    ds, _ = gen_aft_style(spec)
    model = fit_weibull_aft(ds)
    for x in ds.covariates[:10]:
        curve = model.predict_survival(x, times=[0.0, 1.0])
        assert curve.values[0] == pytest.approx(1.0)


def test_curve_value_at_scale_point():
    spec = GeneratorSpec("aft_style", n=500, d=2, censor_target=0.2, seed=5)
    ds, _ = gen_aft_style(spec)
    model = fit_weibull_aft(ds)
    x = ds.covariates[3]
    rho = model.scale(x)
    curve = model.predict_survival(x, times=[rho])
    assert curve.values[0] == pytest.approx(np.exp(-1.0), abs=1e-12)


def test_nonpositive_time_rejected():
    ds = Dataset(np.zeros((2, 1)), [0.0, 1.0], [True, True])
    with pytest.raises(NonPositiveTime):
        fit_weibull_aft(ds)


def test_hazard_monotonicity_matches_shape():
    # decreasing hazard iff shape < 1
    rng = np.random.default_rng(8)
    for true_shape in (0.7, 2.5):
        times = rng.weibull(true_shape, size=2000)
        ds = Dataset(np.zeros((2000, 0)), np.maximum(times, 1e-9),
                     np.ones(2000, dtype=bool))
        model = fit_weibull_aft(ds)
        h = model.hazard(np.zeros(0), [0.5, 1.0, 2.0])
        if model.shape < 1:
            assert h[0] > h[1] > h[2]
        else:
            assert h[0] < h[1] < h[2]


def test_risk_orientation_shorter_life_higher_risk():
    spec = GeneratorSpec("aft_style", n=1000, d=1, censor_target=0.0, seed=6,
                         truth={"beta": [1.0], "beta0": 0.0, "shape": 2.0})
    ds, _ = gen_aft_style(spec)
    model = fit_weibull_aft(ds)
    # larger x -> larger scale -> longer life -> lower risk
    assert model.predict_risk(np.array([-1.0])) > model.predict_risk(
        np.array([1.0]))


def test_gradient_matches_numeric():
    from survkit.models.weibull_aft import _negloglik
    rng = np.random.default_rng(1)
    n, d = 40, 3
    X = rng.standard_normal((n, d))
    log_t = rng.normal(0.3, 0.8, n)
    events = (rng.random(n) < 0.7).astype(float)
    params = rng.normal(0, 0.3, 2 + d)
    f, g = _negloglik(params, X, log_t, events, 0.1, 0.3)
    num = optimize.approx_fprime(params, lambda p: _negloglik(
        p, X, log_t, events, 0.1, 0.3)[0], 1e-7)
    assert np.allclose(g, num, rtol=1e-4, atol=1e-4)


def test_serialization_round_trip():
    spec = GeneratorSpec("aft_style", n=150, d=2, censor_target=0.3, seed=11)
    ds, _ = gen_aft_style(spec)
    model = fit_weibull_aft(ds)
    import json
    from survkit.models import model_from_dict
    clone = model_from_dict(json.loads(json.dumps(model.to_dict())))
    x = ds.covariates[0]
    assert clone.predict_risk(x) == pytest.approx(model.predict_risk(x))
