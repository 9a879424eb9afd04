from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np


class DataError(ValueError):
    """Malformed or inconsistent input data; carries file/line context when known."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)
        self.path = path
        self.line = line


class DataQualityWarning(UserWarning):
    pass


class HeatingType(str, enum.Enum):
    GAS = "gas"
    DISTRICT_HEAT = "district_heat"


@dataclass(frozen=True)
class BuildingMeta:
    building_id: str
    heated_area: float
    num_apartments: int
    heating_type: HeatingType
    holiday_region: str

    def __post_init__(self):
        if not self.heated_area > 0:
            raise DataError(f"building {self.building_id}: heated_area must be > 0, got {self.heated_area}")
        if self.num_apartments < 0:
            raise DataError(f"building {self.building_id}: num_apartments must be >= 0")


@dataclass(frozen=True)
class SeriesRecord:
    """One hourly observation; ``consumption_kwh`` is NaN when the cell was empty."""

    timestamp: np.datetime64
    consumption_kwh: float
    weather: dict[str, float]


@dataclass
class BuildingSeries:
    """Raw (or cleaned) hourly data for one building.

    Rows exist only for timestamps present in the source; missing hours are
    simply absent and missing consumption cells are NaN.
    """

    meta: BuildingMeta
    timestamps: np.ndarray  # datetime64[h], strictly increasing
    consumption: np.ndarray  # float64, NaN = missing
    weather: np.ndarray  # (n, k) float64, NaN = missing
    weather_names: tuple[str, ...]
    fences: tuple[float, float] | None = None
    n_removed: int = 0

    def __len__(self) -> int:
        return len(self.timestamps)

    def records(self) -> list[SeriesRecord]:
        return [SeriesRecord(ts, float(c), dict(zip(self.weather_names, map(float, w))))
                for ts, c, w in zip(self.timestamps, self.consumption, self.weather)]

    def with_consumption(self, consumption: np.ndarray, **changes) -> "BuildingSeries":
        return replace(self, consumption=consumption, **changes)


@dataclass
class Segment:
    """Gap-free hourly run of one building; interpolated hours are flagged."""

    series_id: str
    meta: BuildingMeta
    timestamps: np.ndarray
    consumption: np.ndarray
    weather: np.ndarray
    weather_names: tuple[str, ...]
    interpolated: np.ndarray  # bool

    def __len__(self) -> int:
        return len(self.timestamps)


@dataclass
class Standardization:
    consumption_mean: float
    consumption_std: float
    covariate_mean: np.ndarray
    covariate_std: np.ndarray
    fit_stop: int  # rows [0, fit_stop) were used

    def inverse_consumption(self, y):
        return np.asarray(y) * self.consumption_std + self.consumption_mean

    def to_dict(self) -> dict:
        return {"consumption_mean": self.consumption_mean, "consumption_std": self.consumption_std,
                "covariate_mean": self.covariate_mean.tolist(), "covariate_std": self.covariate_std.tolist(),
                "fit_stop": self.fit_stop}


@dataclass
class FeatureFrame:
    """Per-timestep engineered features for one segment.

    Covariates are the continuous/calendar series that share the time axis
    with consumption; static values are building attributes repeated over
    every timestep on demand.
    """

    series_id: str
    building_id: str
    timestamps: np.ndarray
    consumption: np.ndarray
    covariates: np.ndarray  # (n, n_c)
    covariate_names: tuple[str, ...]
    static: np.ndarray  # (n_s,)
    static_names: tuple[str, ...]
    interpolated: np.ndarray
    avg_daily_fallback: np.ndarray  # bool: row used the first-day fallback
    standardization: Standardization | None = None
    raw_consumption: np.ndarray | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def static_frame(self) -> np.ndarray:
        return np.broadcast_to(self.static, (len(self), len(self.static)))

    def column(self, name: str) -> np.ndarray:
        if name == "consumption_kwh":
            return self.consumption
        if name in self.covariate_names:
            return self.covariates[:, self.covariate_names.index(name)]
        if name in self.static_names:
            return self.static_frame[:, self.static_names.index(name)]
        raise KeyError(name)
