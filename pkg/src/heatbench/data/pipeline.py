"""Fixed-order preprocessing: clean, split/interpolate, engineer features.

Standardization needs the train boundary of each series and therefore runs
in :mod:`heatbench.windowing` once the split is known.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .cleaning import IQR_K, INTERPOLATION_CEILING, MAX_GAP_HOURS, remove_outliers_iqr, split_and_interpolate
from .features import StaticScaler, engineer_features
from .io import HolidayCalendar
from .types import BuildingSeries, FeatureFrame, Segment

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CleaningConfig:
    iqr_k: float = IQR_K
    max_gap_hours: int = MAX_GAP_HOURS
    interpolation_ceiling: float = INTERPOLATION_CEILING


@dataclass
class SeriesReport:
    building_id: str
    n_rows: int
    n_removed: int  # cumulative, including earlier passes
    n_removed_this_pass: int
    n_segments: int
    n_points: int
    n_interpolated: int
    segment_lengths: list[int]

    @property
    def interpolated_fraction(self) -> float:
        return self.n_interpolated / self.n_points if self.n_points else 0.0


@dataclass
class PipelineReport:
    series: list[SeriesReport] = field(default_factory=list)
    static_scaling: dict | None = None

    @property
    def n_series(self) -> int:
        return sum(r.n_segments for r in self.series)

    @property
    def n_points(self) -> int:
        return sum(r.n_points for r in self.series)

    @property
    def n_removed_this_pass(self) -> int:
        return sum(r.n_removed_this_pass for r in self.series)

    @property
    def interpolated_fraction(self) -> float:
        return sum(r.n_interpolated for r in self.series) / self.n_points if self.n_points else 0.0

    def to_dict(self) -> dict:
        return {
            "n_buildings": len(self.series),
            "n_series": self.n_series,
            "n_points": self.n_points,
            "n_removed_this_pass": self.n_removed_this_pass,
            "interpolated_fraction": self.interpolated_fraction,
            "buildings": [dict(asdict(r), interpolated_fraction=r.interpolated_fraction) for r in self.series],
            "static_scaling": self.static_scaling,
        }


@dataclass
class PreprocessResult:
    cleaned: list[BuildingSeries]  # gap-filled series, writable as a corpus
    segments: list[Segment]
    frames: list[FeatureFrame]
    report: PipelineReport


def segments_to_series(original: BuildingSeries, segments: list[Segment]) -> BuildingSeries:
    """Concatenate gap-filled segments back into one series; long gaps stay absent."""
    return BuildingSeries(
        meta=original.meta,
        timestamps=np.concatenate([s.timestamps for s in segments]),
        consumption=np.concatenate([s.consumption for s in segments]),
        weather=np.concatenate([s.weather for s in segments]),
        weather_names=original.weather_names,
        fences=original.fences,
        n_removed=original.n_removed,
    )


def clean_series(series: BuildingSeries, config: CleaningConfig = CleaningConfig()
                 ) -> tuple[BuildingSeries, list[Segment], SeriesReport]:
    before = series.n_removed
    no_outliers = remove_outliers_iqr(series, config.iqr_k)
    segments = split_and_interpolate(no_outliers, config.max_gap_hours, config.interpolation_ceiling)
    report = SeriesReport(
        building_id=series.meta.building_id,
        n_rows=len(series),
        n_removed=no_outliers.n_removed,
        n_removed_this_pass=no_outliers.n_removed - before,
        n_segments=len(segments),
        n_points=sum(len(s) for s in segments),
        n_interpolated=sum(int(s.interpolated.sum()) for s in segments),
        segment_lengths=[len(s) for s in segments],
    )
    return segments_to_series(no_outliers, segments), segments, report


def preprocess_corpus(corpus: list[BuildingSeries], holidays: HolidayCalendar,
                      config: CleaningConfig = CleaningConfig(), scale_static: bool = True) -> PreprocessResult:
    """Run cleaning, splitting and feature engineering over every building.

    Static building attributes are z-scored across the corpus when
    ``scale_static`` is set (area and apartment counts span orders of
    magnitude otherwise).
    """
    report = PipelineReport()
    cleaned, segments, frames = [], [], []
    for series in corpus:
        out, segs, rep = clean_series(series, config)
        cleaned.append(out)
        segments.extend(segs)
        report.series.append(rep)
        frames.extend(engineer_features(seg, series.meta, holidays) for seg in segs)
        log.info("%s: %d removed, %d segment(s), %.2f%% interpolated", rep.building_id,
                 rep.n_removed_this_pass, rep.n_segments, 100 * rep.interpolated_fraction)
    if scale_static and corpus:
        scaler = StaticScaler().fit([s.meta for s in corpus])
        for f in frames:
            f.static = scaler.transform(f.static)
        report.static_scaling = scaler.to_dict()
    return PreprocessResult(cleaned, segments, frames, report)
