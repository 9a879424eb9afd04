"""CSV ingestion and export for building corpora.

Corpus directory layout::

    buildings.csv   building_id,heated_area_m2,num_apartments,heating_type,holiday_region
    holidays.csv    region,date
    <building_id>.csv   timestamp,consumption_kwh,<weather_1>,...,<weather_k>

Timestamps are ISO-8601 UTC on whole hours; an empty cell means missing.
"""

from __future__ import annotations

import csv
import datetime as dt
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .types import BuildingMeta, BuildingSeries, DataError, HeatingType

METADATA_FILE = "buildings.csv"
HOLIDAY_FILE = "holidays.csv"
#: written only for cleaned corpora so a re-run reuses the original outlier fences
FENCES_FILE = "fences.csv"
FENCES_HEADER = ["building_id", "lower", "upper", "n_removed"]
METADATA_HEADER = ["building_id", "heated_area_m2", "num_apartments", "heating_type", "holiday_region"]
HOLIDAY_HEADER = ["region", "date"]

#: meteostat's hourly channels minus the categorical condition code
DEFAULT_WEATHER = ("temp", "dwpt", "rhum", "prcp", "snow", "wdir", "wspd", "wpgt", "pres", "tsun")


@dataclass
class CorpusSchema:
    """Which weather columns to read; ``None`` takes whatever the header lists."""

    weather_columns: tuple[str, ...] | None = DEFAULT_WEATHER
    metadata_file: str = METADATA_FILE
    holiday_file: str = HOLIDAY_FILE


@dataclass
class HolidayCalendar:
    days: dict[str, set[np.datetime64]] = field(default_factory=dict)

    def regions(self) -> list[str]:
        return sorted(self.days)

    def flags(self, region: str, timestamps: np.ndarray) -> np.ndarray:
        if region not in self.days:
            raise DataError(f"missing holiday calendar for region {region!r}")
        dates = timestamps.astype("datetime64[D]")
        hol = np.array(sorted(self.days[region]), dtype="datetime64[D]")
        return np.isin(dates, hol)


def parse_timestamp(text: str) -> np.datetime64:
    s = text.strip()
    if s.endswith("Z"):
        s = s[:-1] + "+00:00"
    stamp = dt.datetime.fromisoformat(s)
    if stamp.tzinfo is not None:
        stamp = stamp.astimezone(dt.timezone.utc).replace(tzinfo=None)
    if stamp.minute or stamp.second or stamp.microsecond:
        raise ValueError(f"timestamp {text!r} is not on a whole hour")
    return np.datetime64(stamp, "h")


def format_timestamp(ts: np.datetime64) -> str:
    return str(np.datetime64(ts, "s")) + "Z"


def _cell(text: str) -> float:
    text = text.strip()
    return float("nan") if text == "" else float(text)


def read_building_csv(path: str | os.PathLike, meta: BuildingMeta,
                      weather_columns: tuple[str, ...] | None = DEFAULT_WEATHER) -> BuildingSeries:
    path = str(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError("empty file", path) from None
        if header[:2] != ["timestamp", "consumption_kwh"]:
            raise DataError(f"header must start with timestamp,consumption_kwh; got {header[:2]}", path, 1)
        available = header[2:]
        names = tuple(available) if weather_columns is None else tuple(weather_columns)
        missing = [w for w in names if w not in available]
        if missing:
            raise DataError(f"weather columns {missing} not in header", path, 1)
        idx = [header.index(w) for w in names]
        stamps, cons, weather = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"expected {len(header)} fields, got {len(row)}", path, lineno)
            try:
                stamps.append(parse_timestamp(row[0]))
                cons.append(_cell(row[1]))
                weather.append([_cell(row[i]) for i in idx])
            except ValueError as exc:
                raise DataError(f"malformed row: {exc}", path, lineno) from None
    timestamps = np.array(stamps, dtype="datetime64[h]")
    consumption = np.array(cons, dtype=np.float64)
    weather_arr = np.array(weather, dtype=np.float64).reshape(len(stamps), len(names))
    order = np.argsort(timestamps, kind="stable")
    timestamps, consumption, weather_arr = timestamps[order], consumption[order], weather_arr[order]
    dup = np.nonzero(np.diff(timestamps.astype(np.int64)) == 0)[0]
    if len(dup):
        raise DataError(f"duplicate timestamp {format_timestamp(timestamps[dup[0]])}", path)
    if np.any(np.isinf(consumption)) or np.any(np.isinf(weather_arr)):
        raise DataError("infinite value in data", path)
    return BuildingSeries(meta, timestamps, consumption, weather_arr, names)


def read_metadata(path: str | os.PathLike) -> list[BuildingMeta]:
    path = str(path)
    metas = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header != METADATA_HEADER:
            raise DataError(f"metadata header must be {','.join(METADATA_HEADER)}", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(METADATA_HEADER):
                raise DataError(f"expected {len(METADATA_HEADER)} fields, got {len(row)}", path, lineno)
            bid, area, apts, heating, region = (c.strip() for c in row)
            try:
                htype = HeatingType(heating)
            except ValueError:
                raise DataError(f"unknown heating_type {heating!r}", path, lineno) from None
            try:
                metas.append(BuildingMeta(bid, float(area), int(apts), htype, region))
            except ValueError as exc:
                raise DataError(str(exc), path, lineno) from None
    ids = [m.building_id for m in metas]
    if len(set(ids)) != len(ids):
        raise DataError("duplicate building_id in metadata", path)
    return metas


def read_holidays(path: str | os.PathLike) -> HolidayCalendar:
    path = str(path)
    cal = HolidayCalendar()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header != HOLIDAY_HEADER:
            raise DataError("holiday header must be region,date", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DataError("expected 2 fields", path, lineno)
            try:
                day = np.datetime64(row[1].strip(), "D")
            except ValueError:
                raise DataError(f"bad date {row[1]!r}", path, lineno) from None
            cal.days.setdefault(row[0].strip(), set()).add(day)
    return cal


def load_corpus(path: str | os.PathLike, schema: CorpusSchema | None = None) -> list[BuildingSeries]:
    """Read every building listed in the metadata file of a corpus directory."""
    schema = schema or CorpusSchema()
    root = Path(path)
    if not (root / schema.metadata_file).exists():
        raise DataError(f"no {schema.metadata_file} in corpus directory", str(root))
    metas = read_metadata(root / schema.metadata_file)
    corpus = []
    for meta in metas:
        fpath = root / f"{meta.building_id}.csv"
        if not fpath.exists():
            raise DataError(f"no data file for building {meta.building_id}", str(fpath))
        corpus.append(read_building_csv(fpath, meta, schema.weather_columns))
    fences = root / FENCES_FILE
    if fences.exists():
        stored = read_fences(fences)
        corpus = [replace(s, fences=stored[s.meta.building_id][:2], n_removed=stored[s.meta.building_id][2])
                  if s.meta.building_id in stored else s for s in corpus]
    return corpus


def read_fences(path: str | os.PathLike) -> dict[str, tuple[float, float, int]]:
    path = str(path)
    out = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        if [h.strip() for h in next(reader, [])] != FENCES_HEADER:
            raise DataError(f"fences header must be {','.join(FENCES_HEADER)}", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                out[row[0].strip()] = (float(row[1]), float(row[2]), int(row[3]))
            except (ValueError, IndexError):
                raise DataError("malformed fences row", path, lineno) from None
    return out


def load_holidays(path: str | os.PathLike, schema: CorpusSchema | None = None) -> HolidayCalendar:
    schema = schema or CorpusSchema()
    return read_holidays(Path(path) / schema.holiday_file)


def _fmt(x: float) -> str:
    return "" if np.isnan(x) else repr(float(x))


def write_building_csv(path: str | os.PathLike, series: BuildingSeries) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "consumption_kwh", *series.weather_names])
        for ts, c, row in zip(series.timestamps, series.consumption, series.weather):
            w.writerow([format_timestamp(ts), _fmt(c), *(_fmt(v) for v in row)])


def write_corpus(path: str | os.PathLike, corpus: list[BuildingSeries], holidays: HolidayCalendar) -> Path:
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    with open(root / METADATA_FILE, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(METADATA_HEADER)
        for s in corpus:
            m = s.meta
            w.writerow([m.building_id, repr(m.heated_area), m.num_apartments, m.heating_type.value,
                        m.holiday_region])
    with open(root / HOLIDAY_FILE, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HOLIDAY_HEADER)
        for region in holidays.regions():
            for day in sorted(holidays.days[region]):
                w.writerow([region, str(day)])
    for s in corpus:
        write_building_csv(root / f"{s.meta.building_id}.csv", s)
    if any(s.fences is not None for s in corpus):
        with open(root / FENCES_FILE, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(FENCES_HEADER)
            for s in corpus:
                if s.fences is not None:
                    w.writerow([s.meta.building_id, repr(s.fences[0]), repr(s.fences[1]), s.n_removed])
    return root
