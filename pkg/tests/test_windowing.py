import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heatbench.data import (BuildingMeta, BuildingSeries, DataQualityWarning, HeatingType, HolidayCalendar,
                            corpus_holidays, engineer_features, preprocess_corpus, split_and_interpolate,
                            synthesize_corpus)
from heatbench.windowing import (FeatureConfig, Layout, WindowSpec, apply_feature_config, build_datasets,
                                 chronological_split, flat_to_sequential, leakage_violations, make_windows,
                                 sequential_to_flat, split_sizes)

META = BuildingMeta("B1", 900.0, 9, HeatingType.DISTRICT_HEAT, "DE")
T0 = np.datetime64("2024-03-04T00", "h")
CAL = HolidayCalendar({"DE": set()})


def frame_of(length, n_weather=2, seed=0):
    rng = np.random.default_rng(seed)
    stamps = T0 + np.arange(length).astype("timedelta64[h]")
    series = BuildingSeries(META, stamps, rng.random(length) + 1.0, rng.normal(size=(length, n_weather)),
                            tuple(f"w{j}" for j in range(n_weather)))
    return engineer_features(split_and_interpolate(series)[0], META, CAL)


@pytest.fixture(scope="module")
def synthetic_frames():
    corpus = synthesize_corpus(5, 120, seed=0)
    return preprocess_corpus(corpus, corpus_holidays(corpus)).frames


def test_window_count_examples():
    assert len(make_windows(frame_of(100), WindowSpec(72, 3))) == 26
    assert len(make_windows(frame_of(75), WindowSpec(72, 3))) == 1
    assert len(make_windows(frame_of(10), WindowSpec(72, 3))) == 0


def test_window_contents_sequential():
    f = frame_of(30)
    ds = make_windows(f, WindowSpec(5, 3, feature_config="all"), Layout.SEQUENTIAL)
    assert ds.X.shape == (23, 5, 1 + f.covariates.shape[1] + 3)
    np.testing.assert_array_equal(ds.X[4, :, 0], f.consumption[4:9])
    np.testing.assert_array_equal(ds.X[4, :, 1:1 + f.covariates.shape[1]], f.covariates[4:9])
    np.testing.assert_array_equal(ds.y[4], f.consumption[9:12])
    # static repeated along time
    assert np.all(ds.X[:, :, -3:] == f.static)


def test_window_contents_flat():
    f = frame_of(30)
    ds = make_windows(f, WindowSpec(5, 3, feature_config="no_building"), Layout.FLAT)
    n_c = f.covariates.shape[1]
    assert ds.X.shape[1] == (1 + n_c) * 5
    np.testing.assert_array_equal(ds.X[2, :5], f.consumption[2:7])
    np.testing.assert_array_equal(ds.X[2, 5:10], f.covariates[2:7, 0])


def test_past_only_flat_width_38():
    ds = make_windows(frame_of(200), WindowSpec(38, 24, feature_config=1), Layout.FLAT)
    assert ds.X.shape[1] == 38


def test_feature_configs_differ_by_static_columns():
    f = frame_of(50)
    covs_nb, names_nb, static_nb, snames_nb = apply_feature_config(f, "no_building")
    covs_all, names_all, static_all, snames_all = apply_feature_config(f, "all")
    assert names_nb == names_all and snames_nb == ()
    assert snames_all == ("heated_area", "num_apartments", "district_heat")
    a = make_windows(f, WindowSpec(6, 3, feature_config=2))
    b = make_windows(f, WindowSpec(6, 3, feature_config=3))
    np.testing.assert_array_equal(b.X[:, :, :a.X.shape[2]], a.X)
    assert b.X.shape[2] - a.X.shape[2] == 3


def test_feature_config_parse():
    assert FeatureConfig.parse(1) is FeatureConfig.PAST_ONLY
    assert FeatureConfig.parse("2") is FeatureConfig.NO_BUILDING
    assert FeatureConfig.parse("all") is FeatureConfig.ALL
    with pytest.raises(ValueError):
        FeatureConfig.parse(4)


def test_spec_validation():
    with pytest.raises(ValueError):
        WindowSpec(0, 3)
    with pytest.raises(ValueError):
        WindowSpec(4, 3, n_future=5)
    with pytest.raises(ValueError):
        WindowSpec(4, 3, step=2)


def test_future_covariates_are_covariates_only():
    f = frame_of(40)
    ds = make_windows(f, WindowSpec(6, 3, n_future=4, feature_config="all"))
    assert ds.future.shape == (len(ds), 4, f.covariates.shape[1])
    np.testing.assert_array_equal(ds.future[0], f.covariates[6:10])
    assert len(ds) == 40 - 6 - 4 + 1


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(1, 4), st.integers(0, 3), st.integers(1, 6))
def test_layout_round_trip(n_in, c, n_s, n):
    rng = np.random.default_rng(n_in * 100 + c * 10 + n_s)
    seq = np.concatenate([rng.normal(size=(n, n_in, c)),
                          np.broadcast_to(rng.normal(size=(n, 1, n_s)), (n, n_in, n_s))], axis=2)
    flat = sequential_to_flat(seq, n_in, c, n_s)
    assert flat.shape == (n, c * n_in + n_s)
    np.testing.assert_array_equal(flat_to_sequential(flat, n_in, c, n_s), seq)


def test_dataset_layout_conversion_matches_direct():
    f = frame_of(40)
    spec = WindowSpec(6, 3)
    seq = make_windows(f, spec, Layout.SEQUENTIAL)
    flat = make_windows(f, spec, Layout.FLAT)
    np.testing.assert_array_equal(seq.as_layout("flat").X, flat.X)
    np.testing.assert_array_equal(flat.as_layout("sequential").X, seq.X)
    np.testing.assert_array_equal(seq.last_observed(3), flat.last_observed(3))


def test_inputs_precede_targets():
    ds = make_windows(frame_of(60), WindowSpec(8, 5))
    assert np.all(ds.input_hours().max(axis=1) < ds.target_hours().min(axis=1))


def test_split_sizes_exact():
    assert split_sizes(1000) == (800, 100, 100)
    assert split_sizes(10) == (8, 1, 1)
    for n in range(0, 500, 7):
        tr, va, te = split_sizes(n)
        assert (tr, va, tr + va + te) == ((8 * n) // 10, n // 10, n)


def test_embargo_for_multi_step_horizon():
    plan = chronological_split(1000, WindowSpec(24, 3))
    assert (plan.n_train, plan.n_val, plan.n_test, plan.embargo) == (800, 100, 100, 2)
    assert len(plan.val) == 98 and len(plan.test) == 98
    # last train target row < first val target row
    assert plan.train[-1] + 24 + 3 - 1 < plan.val[0] + 24


def test_short_series_goes_to_train_with_warning():
    with pytest.warns(DataQualityWarning):
        plan = chronological_split(5, WindowSpec(24, 3))
    assert plan.train_only and len(plan.train) == 5 and len(plan.val) == 0


def test_build_datasets_counts_and_leakage(synthetic_frames):
    spec = WindowSpec(24, 3)
    with warnings.catch_warnings():
        warnings.simplefilter("error", DataQualityWarning)
        split = build_datasets(synthetic_frames, spec)
    total = sum(max(0, len(f) - 24 - 3 + 1) for f in synthetic_frames)
    assert sum(r.n_windows for r in split.report) == total
    kept = len(split.train) + len(split.val) + len(split.test)
    assert kept == total - sum(2 * r.embargo for r in split.report)
    for r in split.report:
        assert (r.n_train, r.n_val + r.embargo, r.n_test + r.embargo) == split_sizes(r.n_windows)
    assert leakage_violations(split) == 0


def test_standardization_fit_on_train_rows(synthetic_frames):
    spec = WindowSpec(24, 3)
    split = build_datasets(synthetic_frames, spec)
    for r in split.report:
        y = split.frames[r.series_id].consumption[:r.fit_stop]
        assert abs(y.mean()) < 1e-9 and abs(y.std() - 1) < 1e-9
        assert r.fit_stop == r.n_train - 1 + 24 + 3
        # every row a train window touches lies inside the fit range
        mask = split.train.series_id == r.series_id
        assert split.train.start[mask].max() + 24 + 3 == r.fit_stop


def test_horizon_24_targets(synthetic_frames):
    split = build_datasets(synthetic_frames[:1], WindowSpec(24, 24))
    assert split.train.y.shape[1] == 24
    assert leakage_violations(split) == 0


def test_leakage_scan_detects_overlap(synthetic_frames):
    split = build_datasets(synthetic_frames[:1], WindowSpec(24, 3))
    split.val.t0[:] -= 10
    assert leakage_violations(split) == 1
