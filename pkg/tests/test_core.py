import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from survkit import (AllCensored, Dataset, DimensionMismatch, NegativeTime,
                     NonFiniteValue, Subject, SurvivalCurve, restricted_mean,
                     risk_set, survival_at, survival_before, validate_dataset)


def test_survival_at_before_first_grid_point():
    curve = SurvivalCurve([1.0, 2.0], [0.8, 0.5])
    assert survival_at(curve, 0.5) == 1.0


def test_survival_at_step_right_continuity():
    curve = SurvivalCurve([1.0, 2.0], [0.8, 0.5])
    assert survival_at(curve, 1.5) == 0.8
    assert survival_at(curve, 1.0) == 0.8
    assert survival_at(curve, 2.0) == 0.5


def test_survival_at_flat_extrapolation():
    curve = SurvivalCurve([1.0, 2.0], [0.8, 0.5])
    assert survival_at(curve, 7.0) == 0.5


def test_survival_at_vectorized():
    curve = SurvivalCurve([1.0, 2.0], [0.8, 0.5])
    out = survival_at(curve, [0.5, 1.5, 7.0])
    assert np.allclose(out, [1.0, 0.8, 0.5])


def test_survival_before_is_left_limit():
    curve = SurvivalCurve([1.0, 2.0], [0.8, 0.5])
    assert survival_before(curve, 1.0) == 1.0
    assert survival_before(curve, 2.0) == 0.8
    assert survival_before(curve, 2.5) == 0.5


def _toy_dataset(times=(1.0, 2.0, 3.0), events=(True, True, True)):
    X = np.zeros((len(times), 1))
    return Dataset(X, times, events)


def test_risk_set_everyone_at_zero():
    ds = _toy_dataset()
    assert set(risk_set(ds, 0)) == {0, 1, 2}


def test_risk_set_strict_inequality():
    ds = _toy_dataset()
    assert set(risk_set(ds, 2)) == {2}


def test_risk_set_past_last_time():
    ds = _toy_dataset()
    assert risk_set(ds, 5).size == 0


def test_validate_dataset_well_formed():
    ds = validate_dataset([([0.0, 1.0], 1.0, True),
                           ([1.0, 0.0], 2.0, False),
                           ([0.5, 0.5], 3.0, True)])
    assert ds.n == 3 and ds.d == 2


def test_validate_dataset_negative_time():
    with pytest.raises(NegativeTime):
        validate_dataset([([0.0], -1.0, True)])


def test_validate_dataset_all_censored():
    with pytest.raises(AllCensored):
        validate_dataset([([0.0], 1.0, False), ([1.0], 2.0, False)])


def test_validate_dataset_non_finite():
    with pytest.raises(NonFiniteValue):
        validate_dataset([([np.nan], 1.0, True)])
    with pytest.raises(NonFiniteValue):
        validate_dataset([([0.0], np.inf, True)])


def test_validate_dataset_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        validate_dataset([([0.0], 1.0, True), ([0.0, 1.0], 2.0, True)])


def test_validate_dataset_accepts_subjects():
    subjects = [Subject([0.0], 1.0, True), Subject([1.0], 2.0, False)]
    assert validate_dataset(subjects).n == 2


def test_curve_rejects_increasing_values():
    with pytest.raises(Exception):
        SurvivalCurve([1.0, 2.0], [0.5, 0.8])


def test_curve_rejects_out_of_range():
    with pytest.raises(Exception):
        SurvivalCurve([1.0, 2.0], [1.5, 0.5])


def test_restricted_mean_step_curve():
    # 1 on [0,1), 0.5 on [1,3), beyond grid ignored
    curve = SurvivalCurve([1.0, 3.0], [0.5, 0.25])
    assert restricted_mean(curve) == pytest.approx(1.0 + 0.5 * 2.0)


@st.composite
def curves(draw):
    n = draw(st.integers(1, 8))
    times = sorted(draw(st.lists(
        st.floats(0.01, 100, allow_nan=False), min_size=n, max_size=n,
        unique=True)))
    values = sorted(draw(st.lists(
        st.floats(0.0, 1.0, allow_nan=False), min_size=n, max_size=n)),
        reverse=True)
    return SurvivalCurve(times, values)


@settings(max_examples=200, deadline=None)
@given(curves(), st.floats(0, 150), st.floats(0, 150))
def test_survival_at_monotone_in_t(curve, t1, t2):
    lo, hi = min(t1, t2), max(t1, t2)
    assert survival_at(curve, lo) >= survival_at(curve, hi)
    assert 0.0 <= survival_at(curve, hi) <= 1.0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 50, allow_nan=False), min_size=2, max_size=20),
       st.floats(0, 60), st.floats(0, 60))
def test_risk_set_shrinks_in_t(times, t1, t2):
    events = [True] * len(times)
    ds = Dataset(np.zeros((len(times), 1)), times, events)
    lo, hi = min(t1, t2), max(t1, t2)
    assert set(risk_set(ds, hi)) <= set(risk_set(ds, lo))
