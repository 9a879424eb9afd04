import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from heatbench.data.types import Standardization
from heatbench.evaluation import (ForecastSet, MetricError, evaluate, mae, mse, nrmse, per_building_nrse,
                                  per_step_rmse, rmse, seed_ci, window_rse, write_reports)

finite = st.floats(-1e3, 1e3, allow_nan=False)


def fset(y_true, y_pred, sids=None):
    y_true, y_pred = np.atleast_2d(y_true), np.atleast_2d(y_pred)
    sids = np.array(sids if sids is not None else ["a"] * len(y_true), dtype=object)
    return ForecastSet(sids, np.arange(len(y_true)), y_true, y_pred)


def test_pointwise_metrics_oracle():
    f = fset([0.0, 0.0], [3.0, 4.0])
    assert mse(f) == 12.5
    assert rmse(f) == pytest.approx(3.53553, abs=1e-5)
    assert mae(f) == 3.5


def test_perfect_forecast_is_zero():
    y = np.arange(12.0).reshape(4, 3)
    f = fset(y, y)
    assert mse(f) == rmse(f) == mae(f) == nrmse(f) == 0
    assert np.all(per_step_rmse(f) == 0)


def test_nrmse_oracle():
    # errors of 5 everywhere give RMSE 5; true values span 0..10
    f = fset([[0.0, 10.0]], [[5.0, 15.0]])
    assert nrmse(f) == 0.5


def test_errors():
    with pytest.raises(MetricError):
        mse(np.zeros((0, 3)), np.zeros((0, 3)))
    with pytest.raises(MetricError):
        nrmse(fset([[1.0, 1.0]], [[2.0, 0.0]]))
    with pytest.raises(MetricError):
        fset([[1.0, np.nan]], [[1.0, 1.0]])
    with pytest.raises(MetricError):
        per_building_nrse(fset([[1.0]], [[2.0]]), {"a": 0.0})
    with pytest.raises(MetricError):
        mse(np.zeros((2, 3)), np.zeros((2, 2)))


@settings(max_examples=60, deadline=None)
@given(arrays(float, (5, 3), elements=finite), arrays(float, (5, 3), elements=finite),
       st.floats(0.01, 100), st.floats(-100, 100))
def test_nrmse_affine_invariance(yt, yp, a, b):
    if np.ptp(yt) < 1e-3:
        return
    base = nrmse(yt, yp)
    assert nrmse(a * yt + b, a * yp + b) == pytest.approx(base, rel=1e-9, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(arrays(float, (6, 4), elements=finite), arrays(float, (6, 4), elements=finite))
def test_metric_identities(yt, yp):
    assert abs(rmse(yt, yp) ** 2 - mse(yt, yp)) <= 1e-12 * max(mse(yt, yp), 1e-300)
    assert mae(yt, yp) <= rmse(yt, yp) * (1 + 1e-12)
    steps = per_step_rmse(yt, yp)
    assert steps.shape == (4,)
    assert np.mean(steps ** 2) == pytest.approx(mse(yt, yp), rel=1e-12, abs=1e-300)


def test_window_rse_and_nrse_oracle():
    f = fset([[10.0, 10.0]], [[13.0, 14.0]])
    assert window_rse(f)[0] == pytest.approx(3.5355339, abs=1e-6)
    nrse = per_building_nrse(f, {"a": 10.0})
    assert nrse["a"][0] == pytest.approx(0.35355339, abs=1e-7)


def test_nrse_scale_invariance():
    rng = np.random.default_rng(0)
    yt = rng.uniform(1, 5, (6, 3))
    yp = yt + rng.standard_normal((6, 3))
    a = per_building_nrse(fset(yt, yp), {"a": yt.mean()})["a"]
    b = per_building_nrse(fset(2 * yt, 2 * yp), {"a": 2 * yt.mean()})["a"]
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_nrse_groups_by_series():
    f = fset([[1.0], [1.0], [1.0]], [[2.0], [3.0], [1.0]], sids=["a", "b", "a"])
    out = per_building_nrse(f, {"a": 1.0, "b": 2.0})
    np.testing.assert_allclose(out["a"], [1.0, 0.0])
    np.testing.assert_allclose(out["b"], [1.0])


def test_pooled_mse_equals_weighted_series_mse():
    rng = np.random.default_rng(1)
    sids = np.array(["a"] * 7 + ["b"] * 3 + ["c"] * 5)
    yt, yp = rng.standard_normal((15, 4)), rng.standard_normal((15, 4))
    f = fset(yt, yp, sids)
    weighted = sum(mse(f.subset(sids == s)) * (sids == s).sum() for s in "abc") / 15
    assert abs(weighted - mse(f)) < 1e-9 * mse(f)


def test_destandardization_roundtrip_for_naive():
    rng = np.random.default_rng(2)
    series = rng.uniform(10, 50, 40)
    st_ = Standardization(float(series.mean()), float(series.std()), np.zeros(0), np.ones(0), 40)
    z = (series - series.mean()) / series.std()
    starts = np.arange(40 - 6 - 3 + 1)
    y_std = np.stack([z[s + 6:s + 9] for s in starts])
    pred_std = np.stack([z[s + 3:s + 6] for s in starts])
    f = ForecastSet.from_standardized(np.array(["a"] * len(starts), dtype=object), starts, y_std, pred_std,
                                      {"a": st_})
    np.testing.assert_allclose(f.y_true, np.stack([series[s + 6:s + 9] for s in starts]), rtol=1e-12)
    np.testing.assert_allclose(f.y_pred, np.stack([series[s + 3:s + 6] for s in starts]), rtol=1e-12)


def test_seed_ci_oracle():
    ci = seed_ci([10.0, 14.0])
    assert ci.mean == 12
    assert ci.half_width == pytest.approx(12.7062 * 2, rel=1e-5)
    assert seed_ci([3.0, 3.0, 3.0]).half_width == 0
    single = seed_ci([5.0])
    assert single.half_width is None and single.mean == 5


def test_seed_ci_shrinks_with_n():
    # constant sample std: t-quantile also drops, so the shrink is at least 1/sqrt(n)
    small = seed_ci([0.0, 1.0] * 2)
    large = seed_ci([0.0, 1.0] * 8)
    ratio = large.half_width / small.half_width
    s_small, s_large = np.std([0, 1] * 2, ddof=1), np.std([0, 1] * 8, ddof=1)
    assert ratio < (s_large / s_small) * np.sqrt(4 / 16)


def test_report_identities_and_files(tmp_path):
    rng = np.random.default_rng(3)
    yt = rng.uniform(5, 20, (30, 24))
    yp = yt + rng.standard_normal((30, 24))
    sids = np.array(["a"] * 15 + ["b"] * 15, dtype=object)
    f = ForecastSet(sids, np.arange(30), yt, yp)
    rep = evaluate("fcn", f, {"a": 10.0, "b": 12.0})
    assert rep.check_identities() == []
    assert rep.per_step.shape == (24,)
    assert abs(np.mean(rep.per_step ** 2) - rep.overall["MSE"]) < 1e-9 * rep.overall["MSE"]
    write_reports([rep], tmp_path)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary[0]["model"] == "fcn" and summary[0]["RMSE"] == rep.overall["RMSE"]
    assert len((tmp_path / "per_step.csv").read_text().strip().splitlines()) == 25
    assert len((tmp_path / "per_building.csv").read_text().strip().splitlines()) == 31


def test_check_identities_detects_tampering():
    f = fset([[0.0, 10.0]], [[5.0, 15.0]])
    rep = evaluate("x", f)
    rep.overall["RMSE"] *= 1.01
    assert "RMSE^2 == MSE" in rep.check_identities()
