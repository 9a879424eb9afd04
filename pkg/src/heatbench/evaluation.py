"""Forecast error metrics and their aggregate views.

All pooled metrics average over every (window, step) pair in kWh.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .data.types import Standardization


class MetricError(ValueError):
    pass


@dataclass
class ForecastSet:
    """Forecasts and truths in kWh, one row per window."""

    series_id: np.ndarray  # (n,)
    start: np.ndarray  # (n,)
    y_true: np.ndarray  # (n, n_out)
    y_pred: np.ndarray  # (n, n_out)

    def __post_init__(self):
        self.y_true = np.asarray(self.y_true, dtype=float)
        self.y_pred = np.asarray(self.y_pred, dtype=float)
        if self.y_true.ndim != 2 or self.y_true.shape != self.y_pred.shape:
            raise MetricError(f"y_true {self.y_true.shape} and y_pred {self.y_pred.shape} must be equal 2-D shapes")
        if not (np.isfinite(self.y_true).all() and np.isfinite(self.y_pred).all()):
            raise MetricError("forecast set contains non-finite values")

    def __len__(self) -> int:
        return len(self.y_true)

    @classmethod
    def from_standardized(cls, series_id, start, y_true_std, y_pred_std,
                          stats_by_series: dict[str, Standardization]) -> "ForecastSet":
        """Undo each row's series standardization before building the set."""
        series_id = np.asarray(series_id, dtype=object)
        y_true = np.empty_like(y_true_std, dtype=float)
        y_pred = np.empty_like(y_pred_std, dtype=float)
        for sid in np.unique(series_id):
            rows = series_id == sid
            st = stats_by_series[sid]
            y_true[rows] = st.inverse_consumption(y_true_std[rows])
            y_pred[rows] = st.inverse_consumption(y_pred_std[rows])
        return cls(series_id, np.asarray(start), y_true, y_pred)

    def subset(self, mask) -> "ForecastSet":
        return ForecastSet(self.series_id[mask], self.start[mask], self.y_true[mask], self.y_pred[mask])


def _pair(forecasts, y_pred=None) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(forecasts, ForecastSet):
        yt, yp = forecasts.y_true, forecasts.y_pred
    else:
        yt, yp = np.asarray(forecasts, dtype=float), np.asarray(y_pred, dtype=float)
        if yt.shape != yp.shape:
            raise MetricError(f"shapes differ: {yt.shape} vs {yp.shape}")
    if yt.size == 0:
        raise MetricError("empty forecast set")
    return yt, yp


def mse(forecasts, y_pred=None) -> float:
    """Mean squared error; accepts a ForecastSet or ``(y_true, y_pred)`` arrays."""
    yt, yp = _pair(forecasts, y_pred)
    return float(np.mean((yt - yp) ** 2))


def rmse(forecasts, y_pred=None) -> float:
    return float(np.sqrt(mse(forecasts, y_pred)))


def mae(forecasts, y_pred=None) -> float:
    yt, yp = _pair(forecasts, y_pred)
    return float(np.mean(np.abs(yt - yp)))


def nrmse(forecasts, y_pred=None) -> float:
    """RMSE over the range of the pooled true values."""
    yt, _ = _pair(forecasts, y_pred)
    span = float(yt.max() - yt.min())
    if not span > 0:
        raise MetricError("true values have zero range; nRMSE undefined")
    return rmse(forecasts, y_pred) / span


def per_step_rmse(forecasts, y_pred=None) -> np.ndarray:
    yt, yp = _pair(forecasts, y_pred)
    if yt.ndim != 2:
        raise MetricError("per-step RMSE needs (windows, horizon) arrays")
    return np.sqrt(np.mean((yt - yp) ** 2, axis=0))


def window_rse(forecasts, y_pred=None) -> np.ndarray:
    """Root of the mean squared error over each window's horizon."""
    yt, yp = _pair(forecasts, y_pred)
    return np.sqrt(np.mean((yt - yp) ** 2, axis=-1))


def per_building_nrse(forecasts: ForecastSet, test_means: dict[str, float]) -> dict[str, np.ndarray]:
    """Per-window RSE divided by the series' mean test consumption, grouped by series."""
    rse = window_rse(forecasts)
    out = {}
    for sid in np.unique(forecasts.series_id):
        mean = test_means[sid]
        if not mean > 0:
            raise MetricError(f"{sid}: mean test consumption is {mean}; NRSE undefined")
        out[sid] = rse[forecasts.series_id == sid] / mean
    return out


@dataclass(frozen=True)
class SeedInterval:
    mean: float
    half_width: float | None  # None when fewer than two seeds
    n: int
    level: float

    def to_dict(self) -> dict:
        return {"mean": self.mean, "half_width": self.half_width, "n": self.n, "level": self.level}


def seed_ci(values, level: float = 0.95) -> SeedInterval:
    """Mean and t-distribution half-width ``t(level, n-1) * s / sqrt(n)`` with sample std ``s``."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise MetricError("no values")
    if v.size < 2:
        return SeedInterval(float(v.mean()), None, 1, level)
    s = float(v.std(ddof=1))
    q = float(stats.t.ppf(0.5 + level / 2.0, v.size - 1))
    return SeedInterval(float(v.mean()), q * s / np.sqrt(v.size), int(v.size), level)


@dataclass
class EvaluationReport:
    model: str
    overall: dict[str, float]
    per_step: np.ndarray
    per_building: dict[str, np.ndarray]
    n_windows: int
    per_seed: dict[str, SeedInterval] = field(default_factory=dict)

    def check_identities(self, tol: float = 1e-9) -> list[str]:
        """Names of violated metric identities (empty when consistent)."""
        o = self.overall
        bad = []
        if abs(o["RMSE"] ** 2 - o["MSE"]) > tol * max(o["MSE"], np.finfo(float).tiny):
            bad.append("RMSE^2 == MSE")
        if o["MAE"] > o["RMSE"] * (1 + tol):
            bad.append("MAE <= RMSE")
        if "range" in o and abs(o["nRMSE"] * o["range"] - o["RMSE"]) > tol * max(o["RMSE"], np.finfo(float).tiny):
            bad.append("nRMSE * range == RMSE")
        if abs(np.mean(self.per_step ** 2) - o["MSE"]) > tol * max(o["MSE"], np.finfo(float).tiny):
            bad.append("mean per-step MSE == MSE")
        return bad

    def summary(self) -> dict:
        return {"model": self.model, "n_windows": self.n_windows, **self.overall,
                "per_seed": {k: v.to_dict() for k, v in self.per_seed.items()}}


def evaluate(model_name: str, forecasts: ForecastSet, test_means: dict[str, float] | None = None) -> EvaluationReport:
    yt = forecasts.y_true
    overall = {"MSE": mse(forecasts), "RMSE": rmse(forecasts), "MAE": mae(forecasts),
               "nRMSE": nrmse(forecasts), "range": float(yt.max() - yt.min())}
    per_building = per_building_nrse(forecasts, test_means) if test_means is not None else {}
    return EvaluationReport(model_name, overall, per_step_rmse(forecasts), per_building, len(forecasts))


def write_reports(reports: list[EvaluationReport], out_dir: str | os.PathLike) -> Path:
    """Write summary, per-step and per-building tables (long format) plus a JSON summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "nRMSE", "RMSE", "MSE", "MAE", "n_windows"])
        for r in reports:
            o = r.overall
            w.writerow([r.model, repr(o["nRMSE"]), repr(o["RMSE"]), repr(o["MSE"]), repr(o["MAE"]), r.n_windows])
    with open(out / "per_step.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "step", "rmse"])
        for r in reports:
            for k, v in enumerate(r.per_step, start=1):
                w.writerow([r.model, k, repr(float(v))])
    with open(out / "per_building.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "series_id", "window", "nrse"])
        for r in reports:
            for sid, vals in sorted(r.per_building.items()):
                for j, v in enumerate(vals):
                    w.writerow([r.model, sid, j, repr(float(v))])
    with open(out / "summary.json", "w") as fh:
        json.dump([r.summary() for r in reports], fh, indent=2, sort_keys=True)
    return out
