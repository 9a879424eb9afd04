"""Calendar, consumption-history and building features, plus per-series standardization."""

from __future__ import annotations

import numpy as np

from .io import HolidayCalendar
from .types import BuildingMeta, DataError, FeatureFrame, HeatingType, Segment, Standardization

CALENDAR_COLUMNS = ("day_of_month", "day_of_week", "is_holiday")
HISTORY_COLUMNS = ("avg_daily_consumption",)
STATIC_COLUMNS = ("heated_area", "num_apartments", "district_heat")
#: covariates passed through unscaled
BINARY_COLUMNS = ("is_holiday",)


def calendar_columns(timestamps: np.ndarray, flags: np.ndarray) -> np.ndarray:
    days = timestamps.astype("datetime64[D]")
    months = days.astype("datetime64[M]")
    dom = (days - months).astype(np.int64) + 1
    # 1970-01-01 was a Thursday; shift so Monday == 0
    dow = (days.astype(np.int64) + 3) % 7
    return np.column_stack([dom, dow, flags.astype(np.float64)]).astype(np.float64)


def average_daily_consumption(timestamps: np.ndarray, consumption: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean daily total over the completed prior days of the segment.

    A day's total is its mean hourly consumption times 24, which treats a
    partial first or last day consistently. Hours on the segment's first day
    have no history and fall back to that day's own total; they are flagged.
    """
    day = timestamps.astype("datetime64[D]").astype(np.int64)
    uniq, inverse = np.unique(day, return_inverse=True)
    sums = np.bincount(inverse, weights=consumption)
    counts = np.bincount(inverse)
    totals = sums / counts * 24.0
    prior = np.empty_like(totals)
    prior[0] = totals[0]
    prior[1:] = np.cumsum(totals)[:-1] / np.arange(1, len(totals))
    return prior[inverse], inverse == 0


def static_values(meta: BuildingMeta) -> np.ndarray:
    return np.array([meta.heated_area, float(meta.num_apartments),
                     1.0 if meta.heating_type is HeatingType.DISTRICT_HEAT else 0.0])


def engineer_features(segment: Segment, meta: BuildingMeta, holidays: HolidayCalendar) -> FeatureFrame:
    flags = holidays.flags(meta.holiday_region, segment.timestamps)
    cal = calendar_columns(segment.timestamps, flags)
    avg, fallback = average_daily_consumption(segment.timestamps, segment.consumption)
    covs = np.column_stack([segment.weather, cal, avg])
    return FeatureFrame(
        series_id=segment.series_id,
        building_id=meta.building_id,
        timestamps=segment.timestamps,
        consumption=segment.consumption.copy(),
        covariates=covs,
        covariate_names=tuple(segment.weather_names) + CALENDAR_COLUMNS + HISTORY_COLUMNS,
        static=static_values(meta),
        static_names=STATIC_COLUMNS,
        interpolated=segment.interpolated.copy(),
        avg_daily_fallback=fallback,
    )


def fit_standardization(frame: FeatureFrame, fit_stop: int) -> Standardization:
    """Population mean/std of consumption and continuous covariates over rows ``[0, fit_stop)``.

    Consumption with zero variance is an error; a flat covariate is only
    centred (std treated as 1).
    """
    if fit_stop <= 0 or fit_stop > len(frame):
        raise DataError(f"{frame.series_id}: fit range [0, {fit_stop}) is empty or out of bounds")
    y = frame.consumption[:fit_stop]
    std = float(y.std())
    if not std > 0:
        raise DataError(f"{frame.series_id}: zero variance in consumption on the fit range")
    covs = frame.covariates[:fit_stop]
    cmean = covs.mean(axis=0)
    cstd = covs.std(axis=0)
    cstd[cstd == 0] = 1.0
    for name in BINARY_COLUMNS:
        if name in frame.covariate_names:
            j = frame.covariate_names.index(name)
            cmean[j], cstd[j] = 0.0, 1.0
    return Standardization(float(y.mean()), std, cmean, cstd, fit_stop)


def standardize(frame: FeatureFrame, fit_stop: int) -> FeatureFrame:
    stats = fit_standardization(frame, fit_stop)
    return apply_standardization(frame, stats)


def apply_standardization(frame: FeatureFrame, stats: Standardization) -> FeatureFrame:
    """Transform the frame's current values; stats compose with any earlier pass so inversion still yields kWh."""
    total = stats
    if frame.standardization is not None:
        prev = frame.standardization
        total = Standardization(
            consumption_mean=prev.consumption_mean + prev.consumption_std * stats.consumption_mean,
            consumption_std=prev.consumption_std * stats.consumption_std,
            covariate_mean=prev.covariate_mean + prev.covariate_std * stats.covariate_mean,
            covariate_std=prev.covariate_std * stats.covariate_std,
            fit_stop=stats.fit_stop,
        )
    return FeatureFrame(
        series_id=frame.series_id,
        building_id=frame.building_id,
        timestamps=frame.timestamps,
        consumption=(frame.consumption - stats.consumption_mean) / stats.consumption_std,
        covariates=(frame.covariates - stats.covariate_mean) / stats.covariate_std,
        covariate_names=frame.covariate_names,
        static=frame.static,
        static_names=frame.static_names,
        interpolated=frame.interpolated,
        avg_daily_fallback=frame.avg_daily_fallback,
        standardization=total,
        raw_consumption=frame.raw_consumption if frame.raw_consumption is not None else frame.consumption,
    )


class StaticScaler:
    """Z-scores building attributes across the corpus (binary flags untouched)."""

    def __init__(self, names: tuple[str, ...] = STATIC_COLUMNS):
        self.names = names
        self.mean: np.ndarray | None = None
        self.std: np.ndarray | None = None

    def fit(self, metas: list[BuildingMeta]) -> "StaticScaler":
        vals = np.array([static_values(m) for m in metas])
        self.mean = vals.mean(axis=0)
        self.std = vals.std(axis=0)
        self.std[self.std == 0] = 1.0
        j = self.names.index("district_heat")
        self.mean[j], self.std[j] = 0.0, 1.0
        return self

    def transform(self, static: np.ndarray) -> np.ndarray:
        return (static - self.mean) / self.std

    def to_dict(self) -> dict:
        return {"names": list(self.names), "mean": self.mean.tolist(), "std": self.std.tolist()}
