"""Seeded desk-scale stand-in for a multi-building heat-consumption corpus.

Demand follows a heating-degree model::

    demand = base + slope * max(0, T_ref - T) + usage(hour, weekday) + noise

with building-specific base load (hot water, scales with apartments) and
slope (scales with heated area). Outliers and gaps are injected afterwards
so the cleaning path has something to do.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .io import DEFAULT_WEATHER, HolidayCalendar
from .types import BuildingMeta, BuildingSeries, HeatingType

T_REF = 15.0
REGION = "DE"
#: fixed-date national holidays; movable feasts are left out
FIXED_HOLIDAYS = ("01-01", "05-01", "10-03", "12-25", "12-26")


@dataclass(frozen=True)
class BuildingProfile:
    base: float  # kWh/h
    slope: float  # kWh/h per kelvin below T_REF
    usage_amplitude: float  # kWh/h
    noise_std: float  # kWh/h


def usage_pattern(hour: np.ndarray, weekday: np.ndarray) -> np.ndarray:
    """Dimensionless daily profile: morning and evening peaks, flatter weekend mornings."""
    weekend = weekday >= 5
    morning_peak = np.where(weekend, 9.0, 7.0)
    morning = np.exp(-0.5 * ((hour - morning_peak) / 1.5) ** 2)
    evening = 0.7 * np.exp(-0.5 * ((hour - 19.0) / 2.0) ** 2)
    night = -0.4 * np.exp(-0.5 * ((hour - 3.0) / 2.0) ** 2)
    return morning + evening + night


def heat_demand(temp: np.ndarray, hour: np.ndarray, weekday: np.ndarray, profile: BuildingProfile,
                noise: np.ndarray | float = 0.0) -> np.ndarray:
    demand = (profile.base + profile.slope * np.maximum(0.0, T_REF - temp)
              + profile.usage_amplitude * usage_pattern(hour, weekday) + noise)
    return np.maximum(demand, 0.0)


def profile_for(meta: BuildingMeta) -> BuildingProfile:
    base = 2.0 + 0.8 * meta.num_apartments
    slope = 0.004 * meta.heated_area
    level = base + 8.0 * slope
    return BuildingProfile(base=base, slope=slope, usage_amplitude=0.25 * level, noise_std=0.05 * level)


def _ar1(rng: np.random.Generator, n: int, phi: float, sigma: float) -> np.ndarray:
    eps = rng.normal(0.0, sigma, n)
    out = np.empty(n)
    acc = 0.0
    for i in range(n):
        acc = phi * acc + eps[i]
        out[i] = acc
    return out


def synthesize_weather(rng: np.random.Generator, timestamps: np.ndarray,
                       names: tuple[str, ...] = DEFAULT_WEATHER) -> np.ndarray:
    n = len(timestamps)
    day = timestamps.astype("datetime64[D]")
    doy = (day - day.astype("datetime64[Y]")).astype(np.int64)
    hour = (timestamps - day).astype(np.int64)
    annual = 9.0 - 10.0 * np.cos(2 * np.pi * (doy - 20) / 365.25)
    daily = 3.0 * np.sin(2 * np.pi * (hour - 9) / 24.0)
    temp = annual + daily + _ar1(rng, n, 0.97, 0.5)
    dwpt = temp - 3.0 - np.abs(_ar1(rng, n, 0.9, 0.5))
    rhum = np.clip(100.0 - 5.0 * (temp - dwpt), 5.0, 100.0)
    prcp = np.where(rng.random(n) < 0.08, rng.gamma(1.2, 0.8, n), 0.0)
    snow = np.where(temp < 0.0, np.maximum(0.0, -temp) * 2.0, 0.0)
    wdir = np.mod(200.0 + np.cumsum(rng.normal(0.0, 8.0, n)), 360.0)
    wspd = np.exp(2.3 + _ar1(rng, n, 0.95, 0.12))
    wpgt = wspd * (1.5 + 0.2 * rng.random(n))
    pres = 1013.0 + _ar1(rng, n, 0.99, 0.4)
    tsun = np.where((hour >= 8) & (hour <= 16), np.clip(60 * rng.beta(0.8, 1.2, n), 0, 60), 0.0)
    channels = {"temp": temp, "dwpt": dwpt, "rhum": rhum, "prcp": prcp, "snow": snow, "wdir": wdir,
                "wspd": wspd, "wpgt": wpgt, "pres": pres, "tsun": tsun}
    cols = [channels[nm] if nm in channels else _ar1(rng, n, 0.95, 1.0) for nm in names]
    return np.column_stack(cols) if cols else np.zeros((n, 0))


def synthetic_holidays(first_year: int, last_year: int, region: str = REGION) -> HolidayCalendar:
    days = {np.datetime64(f"{y}-{md}", "D") for y in range(first_year, last_year + 1) for md in FIXED_HOLIDAYS}
    return HolidayCalendar({region: days})


def synthesize_corpus(n_buildings: int, days: int, seed: int = 0, *,
                      weather_names: tuple[str, ...] = DEFAULT_WEATHER,
                      outlier_rate: float = 0.003, short_gaps: int = 2, long_gaps: int = 0,
                      long_gap_hours: int = 30) -> list[BuildingSeries]:
    """Generate ``n_buildings`` hourly series of ``days`` days each, bitwise reproducible per seed.

    Each building starts on its own date between September and March.
    ``short_gaps`` runs of 1-12 missing hours get interpolated later;
    ``long_gaps`` runs of ``long_gap_hours`` split the series.
    """
    if n_buildings < 1:
        raise ValueError("n_buildings must be >= 1")
    if days < 1:
        raise ValueError("days must be >= 1")
    children = np.random.SeedSequence(seed).spawn(n_buildings)
    corpus = []
    for b, ss in enumerate(children):
        rng = np.random.default_rng(ss)
        area = float(np.round(rng.uniform(300.0, 3000.0), 1))
        meta = BuildingMeta(
            building_id=f"B{b:03d}",
            heated_area=area,
            num_apartments=int(max(1, round(area / 80.0 + rng.normal(0, 2)))),
            heating_type=HeatingType.DISTRICT_HEAT if rng.random() < 0.5 else HeatingType.GAS,
            holiday_region=REGION,
        )
        start = np.datetime64("2023-09-01T00", "h") + np.timedelta64(int(rng.integers(0, 180)) * 24, "h")
        n = days * 24
        stamps = start + np.arange(n).astype("timedelta64[h]")
        weather = synthesize_weather(rng, stamps, weather_names)
        temp = weather[:, weather_names.index("temp")] if "temp" in weather_names \
            else synthesize_weather(rng, stamps, ("temp",))[:, 0]
        day = stamps.astype("datetime64[D]")
        hour = (stamps - day).astype(np.int64)
        weekday = (day.astype(np.int64) + 3) % 7
        profile = profile_for(meta)
        cons = heat_demand(temp, hour, weekday, profile, rng.normal(0.0, profile.noise_std, n))

        spikes = rng.random(n) < outlier_rate
        cons[spikes] = cons[spikes] * 10.0 + 500.0
        keep = np.ones(n, dtype=bool)
        for g in range(short_gaps):
            length = int(rng.integers(1, 13))
            at = int(rng.integers(48, max(49, n - 48 - length)))
            if g % 2 == 0:
                keep[at:at + length] = False  # rows absent
            else:
                cons[at:at + length] = np.nan  # rows present, cells empty
        for g in range(long_gaps):
            at = int((g + 1) * n / (long_gaps + 1))
            keep[at:at + long_gap_hours] = False
        corpus.append(BuildingSeries(meta, stamps[keep], cons[keep], weather[keep], tuple(weather_names)))
    return corpus


def corpus_holidays(corpus: list[BuildingSeries]) -> HolidayCalendar:
    years = [int(str(s.timestamps[i].astype("datetime64[Y]"))) for s in corpus for i in (0, -1)]
    return synthetic_holidays(min(years), max(years))
