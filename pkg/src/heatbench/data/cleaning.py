"""Outlier removal and gap handling."""

from __future__ import annotations

import logging
import warnings

import numpy as np

from .types import BuildingSeries, DataError, DataQualityWarning, Segment

log = logging.getLogger(__name__)

IQR_K = 1.5
MAX_GAP_HOURS = 24
INTERPOLATION_CEILING = 0.10


def iqr_fences(values: np.ndarray, k: float = IQR_K) -> tuple[float, float]:
    q1, q3 = np.percentile(values, [25, 75])
    iqr = q3 - q1
    return float(q1 - k * iqr), float(q3 + k * iqr)


def remove_outliers_iqr(series: BuildingSeries, k: float = IQR_K) -> BuildingSeries:
    """Blank out consumption values outside the IQR fences (and any negative reading).

    Fences come from the raw consumption of the whole series. A series that
    was already cleaned keeps its original fences, which makes the step
    idempotent.
    """
    observed = series.consumption[~np.isnan(series.consumption)]
    if observed.size == 0:
        raise DataError(f"building {series.meta.building_id}: series empty")
    lo, hi = series.fences if series.fences is not None else iqr_fences(observed, k)
    cons = series.consumption.copy()
    bad = ~np.isnan(cons) & ((cons < lo) | (cons > hi) | (cons < 0))
    cons[bad] = np.nan
    if np.isnan(cons).all():
        raise DataError(f"building {series.meta.building_id}: series empty after outlier removal")
    return series.with_consumption(cons, fences=(lo, hi), n_removed=series.n_removed + int(bad.sum()))


def _fill_channel(grid: np.ndarray, times: np.ndarray, values: np.ndarray) -> np.ndarray:
    ok = ~np.isnan(values)
    if not ok.any():
        return np.zeros(len(grid))
    return np.interp(grid, times[ok], values[ok])


def split_and_interpolate(series: BuildingSeries, max_gap: int = MAX_GAP_HOURS,
                          ceiling: float = INTERPOLATION_CEILING) -> list[Segment]:
    """Split at runs of more than ``max_gap`` missing hours; interpolate shorter runs linearly.

    A gap is the number of missing hours between two observed consumption
    values, so a run of exactly ``max_gap`` missing hours is filled.
    """
    hours = series.timestamps.astype("datetime64[h]").astype(np.int64)
    obs = ~np.isnan(series.consumption)
    t_obs = hours[obs]
    if t_obs.size == 0:
        raise DataError(f"building {series.meta.building_id}: series empty")
    y_obs = series.consumption[obs]
    missing_run = np.diff(t_obs) - 1
    cuts = np.nonzero(missing_run > max_gap)[0]
    starts = np.concatenate([[0], cuts + 1])
    stops = np.concatenate([cuts + 1, [t_obs.size]])

    segments = []
    for k, (a, b) in enumerate(zip(starts, stops)):
        t0, t1 = t_obs[a], t_obs[b - 1]
        grid = np.arange(t0, t1 + 1)
        cons = np.interp(grid, t_obs[a:b], y_obs[a:b])
        interp = ~np.isin(grid, t_obs[a:b])
        rows = (hours >= t0) & (hours <= t1)
        weather = np.column_stack([_fill_channel(grid, hours[rows], series.weather[rows, j])
                                   for j in range(series.weather.shape[1])]) \
            if series.weather.shape[1] else np.zeros((len(grid), 0))
        segments.append(Segment(
            series_id=f"{series.meta.building_id}/{k}",
            meta=series.meta,
            timestamps=grid.astype("datetime64[h]"),
            consumption=cons,
            weather=weather,
            weather_names=series.weather_names,
            interpolated=interp,
        ))

    total = sum(len(s) for s in segments)
    frac = sum(int(s.interpolated.sum()) for s in segments) / total
    if frac > ceiling:
        warnings.warn(f"building {series.meta.building_id}: {frac:.1%} of points interpolated "
                      f"(ceiling {ceiling:.0%})", DataQualityWarning, stacklevel=2)
    return segments


def interpolated_fraction(segments: list[Segment]) -> float:
    total = sum(len(s) for s in segments)
    return sum(int(s.interpolated.sum()) for s in segments) / total if total else 0.0
