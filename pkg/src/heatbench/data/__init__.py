"""Ingestion, cleaning, feature engineering and synthetic data for building heat series."""

from .cleaning import (IQR_K, INTERPOLATION_CEILING, MAX_GAP_HOURS, iqr_fences, interpolated_fraction,
                       remove_outliers_iqr, split_and_interpolate)
from .features import (CALENDAR_COLUMNS, STATIC_COLUMNS, StaticScaler, apply_standardization,
                       average_daily_consumption, engineer_features, fit_standardization, standardize)
from .io import (DEFAULT_WEATHER, CorpusSchema, HolidayCalendar, load_corpus, load_holidays, read_building_csv,
                 read_holidays, read_metadata, write_corpus)
from .pipeline import CleaningConfig, PipelineReport, PreprocessResult, clean_series, preprocess_corpus
from .synth import corpus_holidays, heat_demand, synthesize_corpus, synthetic_holidays
from .types import (BuildingMeta, BuildingSeries, DataError, DataQualityWarning, FeatureFrame, HeatingType,
                    Segment, SeriesRecord, Standardization)

__all__ = [
    "IQR_K", "INTERPOLATION_CEILING", "MAX_GAP_HOURS", "iqr_fences", "interpolated_fraction",
    "remove_outliers_iqr", "split_and_interpolate", "CALENDAR_COLUMNS", "STATIC_COLUMNS", "StaticScaler",
    "apply_standardization", "average_daily_consumption", "engineer_features", "fit_standardization",
    "standardize", "DEFAULT_WEATHER", "CorpusSchema", "HolidayCalendar", "load_corpus", "load_holidays",
    "read_building_csv", "read_holidays", "read_metadata", "write_corpus", "CleaningConfig", "PipelineReport",
    "PreprocessResult", "clean_series", "preprocess_corpus", "corpus_holidays", "heat_demand",
    "synthesize_corpus", "synthetic_holidays", "BuildingMeta", "BuildingSeries", "DataError",
    "DataQualityWarning", "FeatureFrame", "HeatingType", "Segment", "SeriesRecord", "Standardization",
]
