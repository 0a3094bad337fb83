import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from survkit import (CensoringEstimate, Dataset, NoEligiblePairs,
                     SurvivalCurve, ZeroCensoringProbability, brier_score,
                     concordance_index, eligible_pairs, integrated_brier_score,
                     km_censoring, km_survival, survival_at)


def _ds(times, events, d=1):
    return Dataset(np.zeros((len(times), d)), times, events)


# --- Kaplan-Meier censoring estimator ---------------------------------------

def test_km_censoring_no_censoring_is_one():
    est = km_censoring(_ds([1, 2, 3], [1, 1, 1]))
    assert np.all(est.curve.values == 1.0)


def test_km_censoring_two_subjects():
    # hand product-limit: 1 censoring among 2 at risk at t=1
    est = km_censoring(_ds([1, 2], [0, 1]))
    assert survival_at(est.curve, 0.5) == 1.0
    assert survival_at(est.curve, 1.0) == pytest.approx(0.5, abs=1e-9)
    assert survival_at(est.curve, 5.0) == pytest.approx(0.5, abs=1e-9)


def test_km_censoring_three_subjects():
    # hand product-limit: (1 - 1/3) * (1 - 1/2) = 1/3
    est = km_censoring(_ds([1, 2, 3], [0, 0, 1]))
    assert survival_at(est.curve, 0.5) == 1.0
    assert survival_at(est.curve, 1.0) == pytest.approx(2 / 3, abs=1e-9)
    assert survival_at(est.curve, 2.0) == pytest.approx(1 / 3, abs=1e-9)
    assert survival_at(est.curve, 9.0) == pytest.approx(1 / 3, abs=1e-9)


def test_km_censoring_flipped_events_is_km_survival():
    rng = np.random.default_rng(5)
    times = rng.uniform(0.1, 10, 40)
    events = rng.random(40) < 0.6
    flipped = _ds(times, ~events)
    straight = _ds(times, events)
    km_c = km_censoring(flipped).curve
    km_s = km_survival(straight)
    assert np.array_equal(km_c.times, km_s.times)
    assert np.allclose(km_c.values, km_s.values)


# --- concordance index -------------------------------------------------------

def test_concordance_perfectly_anti_monotone():
    ds = _ds([1, 2, 3], [1, 1, 1])
    assert concordance_index([3, 2, 1], ds) == 1.0


def test_concordance_all_tied_risks():
    ds = _ds([1, 2, 3], [1, 1, 1])
    assert concordance_index([1, 1, 1], ds) == 0.5


def test_concordance_one_discordant_pair():
    # eligible pairs (1,2),(1,3),(2,3); pair (2,3) discordant -> 2/3
    ds = _ds([1, 2, 3], [1, 1, 1])
    assert concordance_index([3, 1, 2], ds) == 2 / 3


def test_concordance_reversed_risks():
    ds = _ds([1, 2, 3], [1, 1, 1])
    assert concordance_index([1, 2, 3], ds) == 0.0


def test_concordance_excludes_tied_times():
    ds = _ds([1, 1, 2], [1, 1, 1])
    # only pairs (0,2) and (1,2) are eligible
    assert concordance_index([5, 0, 1], ds) == 0.5


def test_concordance_censored_earlier_excluded():
    ds = _ds([1, 2], [0, 1])
    with pytest.raises(NoEligiblePairs):
        concordance_index([1, 0], ds)


def test_concordance_all_times_tied():
    ds = _ds([2, 2, 2], [1, 1, 1])
    with pytest.raises(NoEligiblePairs):
        concordance_index([1, 2, 3], ds)


def test_eligible_pairs_definition():
    ds = _ds([1, 2, 2, 3], [0, 1, 1, 1])
    pairs = {tuple(p) for p in eligible_pairs(ds)}
    # earlier time censored (subject 0) is never eligible; the tied pair
    # (1, 2) is excluded
    assert pairs == {(1, 3), (2, 3)}


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_concordance_invariant_under_monotone_transform(seed):
    rng = np.random.default_rng(seed)
    n = 12
    ds = _ds(rng.uniform(0, 10, n), rng.random(n) < 0.7)
    if not ds.events.any():
        return
    risks = rng.standard_normal(n)
    try:
        base = concordance_index(risks, ds)
    except NoEligiblePairs:
        return
    assert concordance_index(np.exp(2 * risks) + 5, ds) == base


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_concordance_sign_flip(seed):
    rng = np.random.default_rng(seed)
    n = 10
    ds = _ds(rng.uniform(0, 10, n), rng.random(n) < 0.7)
    if not ds.events.any():
        return
    risks = rng.standard_normal(n)  # continuous: no ties
    try:
        base = concordance_index(risks, ds)
    except NoEligiblePairs:
        return
    assert concordance_index(-risks, ds) == pytest.approx(1.0 - base)


# --- Brier score --------------------------------------------------------------

def _const_curve(value):
    # a single knot at 0 makes the curve equal to `value` for all t >= 0
    return SurvivalCurve([0.0], [value])


def test_brier_perfect_prediction_before_events():
    ds = _ds([5, 6, 7], [1, 1, 1])
    censor = km_censoring(ds)
    preds = [_const_curve(1.0)] * 3
    assert brier_score(preds, ds, 1.0, censor) == 0.0


def test_brier_single_subject_hand_values():
    # (y=2, event), constant 0.5 prediction, no censoring:
    # BS(1) = (1-0.5)^2, BS(3) = (0-0.5)^2
    ds = _ds([2], [1])
    censor = km_censoring(ds)
    preds = [_const_curve(0.5)]
    assert brier_score(preds, ds, 1.0, censor) == pytest.approx(0.25, abs=1e-9)
    assert brier_score(preds, ds, 3.0, censor) == pytest.approx(0.25, abs=1e-9)


def test_brier_censored_before_t_has_zero_weight():
    ds = Dataset(np.zeros((2, 1)), [1.0, 5.0], [False, True])
    censor = km_censoring(ds)
    preds = [_const_curve(0.9), _const_curve(1.0)]
    # subject 0 censored before t=2 contributes nothing; subject 1 alive
    # with perfect prediction contributes 0
    assert brier_score(preds, ds, 2.0, censor) == pytest.approx(0.0, abs=1e-12)


def test_brier_equals_mse_when_uncensored():
    rng = np.random.default_rng(3)
    n = 25
    times = rng.uniform(0.5, 10, n)
    ds = _ds(times, np.ones(n, dtype=bool))
    censor = CensoringEstimate(_const_curve(1.0))
    values = rng.random(n)
    preds = [_const_curve(v) for v in values]
    t = 4.0
    expected = np.mean(((times > t).astype(float) - values) ** 2)
    assert brier_score(preds, ds, t, censor) == pytest.approx(expected,
                                                              abs=1e-12)


def test_brier_zero_censoring_probability():
    # an external censoring estimate that dies before a subject is still
    # at risk makes the IPCW weight undefined
    ds = Dataset(np.zeros((2, 1)), [1.0, 5.0], [True, True])
    censor = CensoringEstimate(SurvivalCurve([2.0], [0.0]))
    preds = [_const_curve(0.5)] * 2
    with pytest.raises(ZeroCensoringProbability):
        brier_score(preds, ds, 3.0, censor)
    with pytest.raises(ZeroCensoringProbability):
        integrated_brier_score(preds, ds, 4.0, censor)


# --- integrated Brier score ----------------------------------------------------

def test_ibs_zero_for_perfect_early_horizon():
    ds = _ds([5, 6, 7], [1, 1, 1])
    censor = km_censoring(ds)
    preds = [_const_curve(1.0)] * 3
    assert integrated_brier_score(preds, ds, 4.0, censor) == 0.0


def test_ibs_single_subject_hand_integral():
    # BS constant at 0.25 on [0, 4] -> IBS = 0.25
    ds = _ds([2], [1])
    censor = km_censoring(ds)
    preds = [_const_curve(0.5)]
    assert integrated_brier_score(preds, ds, 4.0, censor) == pytest.approx(
        0.25, abs=1e-9)


def _random_instance(seed, n=30):
    rng = np.random.default_rng(seed)
    times = rng.uniform(0.1, 10, n)
    events = rng.random(n) < 0.6
    if not events.any():
        events[0] = True
    ds = Dataset(rng.standard_normal((n, 2)), times, events)
    curves = []
    for _ in range(n):
        k = rng.integers(3, 9)
        knots = np.sort(rng.uniform(0.1, 10, k))
        vals = np.sort(rng.random(k))[::-1]
        curves.append(SurvivalCurve(knots, vals))
    return ds, curves


def _dense_midpoint_ibs(curves, ds, tau, censor, points=10_000):
    grid = np.linspace(0.0, tau, points + 1)
    mids = 0.5 * (grid[:-1] + grid[1:])
    from survkit.scoring import _brier_on_grid, curve_matrix
    bs = _brier_on_grid(curve_matrix(curves, mids), ds, mids, censor)
    return float(np.mean(bs))


@pytest.mark.parametrize("seed", range(5))
def test_ibs_matches_dense_integration_oracle(seed):
    ds, curves = _random_instance(seed)
    censor = km_censoring(ds)
    tau = float(np.quantile(ds.times, 0.9))
    impl = integrated_brier_score(curves, ds, tau, censor)
    oracle = _dense_midpoint_ibs(curves, ds, tau, censor)
    assert impl == pytest.approx(oracle, abs=1e-3)


def test_ibs_convex_in_predictions():
    ds, curves_a = _random_instance(11)
    _, curves_b = _random_instance(12)
    censor = km_censoring(ds)
    tau = float(np.quantile(ds.times, 0.9))

    def blend(alpha):
        grid = np.unique(np.concatenate(
            [c.times for c in curves_a] + [c.times for c in curves_b]))
        out = []
        for ca, cb in zip(curves_a, curves_b):
            va = survival_at(ca, grid)
            vb = survival_at(cb, grid)
            out.append(SurvivalCurve(grid, alpha * va + (1 - alpha) * vb))
        return out

    ibs_a = integrated_brier_score(curves_a, ds, tau, censor)
    ibs_b = integrated_brier_score(curves_b, ds, tau, censor)
    for alpha in (0.25, 0.5, 0.75):
        mixed = integrated_brier_score(blend(alpha), ds, tau, censor)
        assert mixed <= alpha * ibs_a + (1 - alpha) * ibs_b + 1e-12
