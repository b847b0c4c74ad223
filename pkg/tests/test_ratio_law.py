import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ratiolaw.errors import DataError
from ratiolaw.metrics import point_metrics
from ratiolaw.ratio_law import (
    EXTERNAL_TASKS,
    auprc_random,
    auprc_random_derivative,
    expected_confusion_random,
    external_task_points,
    f1_random,
    f1_random_derivative,
    fit_ratio_law,
    fit_with_intercept,
    small_r_error,
)

# exact rational product-moment correlation, evaluated to 40 digits
PEARSON_F1 = 0.95427618962156275
PEARSON_AUPRC = 0.93384469250608471

r_st = st.floats(1e-6, 1.0)


def test_curve_examples():
    assert f1_random(1.0) == 0.5
    assert auprc_random(1.0) == 0.5
    assert f1_random(1 / 3) == pytest.approx(1 / 3, abs=1e-15)
    assert auprc_random(1 / 3) == pytest.approx(0.25, abs=1e-15)
    assert f1_random(1e-9) < 1e-8
    assert auprc_random(1e-9) < 1e-8


@pytest.mark.parametrize("fn", [f1_random, auprc_random, f1_random_derivative,
                                auprc_random_derivative, expected_confusion_random, small_r_error])
@pytest.mark.parametrize("r", [0.0, -0.1, 1.0001, math.nan])
def test_domain_errors(fn, r):
    with pytest.raises(DataError):
        fn(r)


def test_expected_confusion_examples():
    c = expected_confusion_random(1.0)
    assert (c.tp, c.fp, c.fn, c.tn) == (0.25, 0.25, 0.25, 0.25)
    c = expected_confusion_random(1 / 3)
    assert c.tp == pytest.approx(0.125) and c.fn == pytest.approx(0.125)
    assert c.fp == pytest.approx(0.375) and c.tn == pytest.approx(0.375)


@settings(max_examples=200)
@given(r=r_st)
def test_expected_confusion_normalised_and_consistent(r):
    c = expected_confusion_random(r)
    assert c.tp + c.fp + c.fn + c.tn == pytest.approx(1.0, abs=1e-15)
    assert point_metrics(c).f1 == pytest.approx(f1_random(r), rel=1e-14)


@settings(max_examples=200)
@given(a=r_st, b=r_st)
def test_strict_monotonicity(a, b):
    if a == b:
        return
    lo, hi = min(a, b), max(a, b)
    assert f1_random(lo) < f1_random(hi)
    assert auprc_random(lo) < auprc_random(hi)


def test_derivatives_match_finite_differences():
    h = 1e-6
    for i in range(1, 21):
        r = 0.05 * i
        lo, hi = r - h, min(r + h, 1.0)
        fd_f1 = (f1_random(hi) - f1_random(lo)) / (hi - lo)
        fd_ap = (auprc_random(hi) - auprc_random(lo)) / (hi - lo)
        tol = 1e-6 if hi > r else 1e-5  # one-sided at r = 1
        assert fd_f1 == pytest.approx(f1_random_derivative(r), rel=tol)
        assert fd_ap == pytest.approx(auprc_random_derivative(r), rel=tol)


def test_small_r_error_examples():
    e = small_r_error(0.01)
    assert e["f1_abs_err"] <= 6e-4 and e["auprc_abs_err"] <= 1e-4
    assert e["f1_abs_err"] == pytest.approx(2 * 0.01 - f1_random(0.01), abs=1e-15)
    assert e["auprc_abs_err"] == pytest.approx(0.01 - auprc_random(0.01), abs=1e-15)
    e = small_r_error(0.15)
    assert e["f1_abs_err"] < 0.1 and e["auprc_abs_err"] < 0.1
    tiny = small_r_error(1e-6)
    assert tiny["f1_abs_err"] < 1e-11 and tiny["auprc_abs_err"] < 1e-11


def test_fit_exact_line():
    fit = fit_ratio_law([(0.1, 0.2), (0.3, 0.6), (0.5, 1.0), (0.8, 1.6)])
    assert fit.coefficient == pytest.approx(2.0, abs=1e-14)
    assert fit.pearson_r == pytest.approx(1.0, abs=1e-14)


def test_fit_errors():
    with pytest.raises(DataError):
        fit_ratio_law([(0.2, 0.4)])
    with pytest.raises(DataError):
        fit_ratio_law([(0.2, 0.4), (0.2, 0.5)])


def test_fit_two_points():
    fit = fit_ratio_law([(0.1, 0.3), (0.2, 0.5)])
    assert fit.pearson_r == 1.0 and fit.p_value == 1.0


@settings(max_examples=100)
@given(
    pts=st.lists(st.tuples(st.floats(0.01, 1.0), st.floats(0.0, 1.0)), min_size=3, max_size=12),
    scale=st.floats(0.1, 10.0),
    seed=st.randoms(use_true_random=False),
)
def test_fit_order_and_scale(pts, scale, seed):
    if len({p[0] for p in pts}) < 2:
        return
    base = fit_ratio_law(pts).coefficient
    shuffled = list(pts)
    seed.shuffle(shuffled)
    assert fit_ratio_law(shuffled).coefficient == pytest.approx(base, rel=1e-12, abs=1e-15)
    scaled = [(r, m * scale) for r, m in pts]
    assert fit_ratio_law(scaled).coefficient == pytest.approx(base * scale, rel=1e-12, abs=1e-15)


def test_external_task_fixture():
    assert len(EXTERNAL_TASKS) == 10
    f1 = fit_ratio_law(external_task_points("f1"))
    ap = fit_ratio_law(external_task_points("auprc"))
    assert f1.pearson_r == pytest.approx(PEARSON_F1, abs=1e-12)
    assert ap.pearson_r == pytest.approx(PEARSON_AUPRC, abs=1e-12)
    assert f1.p_value < 1e-4
    with pytest.raises(DataError):
        external_task_points("auroc")


def test_intercept_fit_matches_numpy():
    import numpy as np

    pts = external_task_points("f1")
    r, m = np.array(pts).T
    slope, intercept = np.polyfit(r, m, 1)
    fit = fit_with_intercept(pts)
    assert fit.slope == pytest.approx(slope, rel=1e-10)
    assert fit.intercept == pytest.approx(intercept, rel=1e-10)
