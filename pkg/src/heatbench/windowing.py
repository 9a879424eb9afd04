"""Sliding-window supervised datasets in flat and sequential layouts.

A window starting at row ``s`` of a segment uses inputs ``[s, s + n_in)``
and targets ``[s + n_in, s + n_in + n_out)``. Known-future covariates cover
``[s + n_in, s + n_in + n_future)``.

Flat rows are laid out block-wise::

    [consumption(n_in) | covariate_1(n_in) | ... | covariate_nc(n_in) | static(n_s)]

Sequential rows are ``(n_in, 1 + n_c + n_s)`` with static values repeated
along time.
"""

from __future__ import annotations

import enum
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data.features import fit_standardization, apply_standardization
from .data.types import DataQualityWarning, FeatureFrame, Standardization

log = logging.getLogger(__name__)

SPLIT_RATIOS = (0.8, 0.1, 0.1)


class FeatureConfig(str, enum.Enum):
    PAST_ONLY = "past_only"
    NO_BUILDING = "no_building"
    ALL = "all"

    @classmethod
    def parse(cls, value) -> "FeatureConfig":
        """Accept the enum, its name, or the numeric flag 1/2/3."""
        if isinstance(value, cls):
            return value
        numeric = {"1": cls.PAST_ONLY, "2": cls.NO_BUILDING, "3": cls.ALL}
        key = str(value).strip().lower()
        if key in numeric:
            return numeric[key]
        return cls(key)


class Layout(str, enum.Enum):
    FLAT = "flat"
    SEQUENTIAL = "sequential"


@dataclass(frozen=True)
class WindowSpec:
    n_in: int
    n_out: int
    n_future: int = 0
    feature_config: FeatureConfig = FeatureConfig.ALL
    step: int = 1

    def __post_init__(self):
        object.__setattr__(self, "feature_config", FeatureConfig.parse(self.feature_config))
        if self.n_in < 1 or self.n_out < 1:
            raise ValueError("n_in and n_out must be >= 1")
        if self.step != 1:
            raise ValueError("only step = 1 is supported")
        if not 0 <= self.n_future <= self.n_in:
            raise ValueError(f"n_future must lie in [0, n_in]; got {self.n_future}")
        if self.n_future and self.feature_config is FeatureConfig.PAST_ONLY:
            raise ValueError("future covariates need a feature config with covariates")

    @property
    def reach(self) -> int:
        """Rows a window touches past its last input."""
        return max(self.n_out, self.n_future)

    def window_count(self, length: int) -> int:
        return max(0, length - self.n_in - self.reach + 1)

    def to_dict(self) -> dict:
        return {"n_in": self.n_in, "n_out": self.n_out, "n_future": self.n_future,
                "feature_config": self.feature_config.value, "step": self.step}


def apply_feature_config(frame: FeatureFrame, config) -> tuple[np.ndarray, tuple[str, ...], np.ndarray, tuple[str, ...]]:
    """Select covariate and static columns; consumption is always kept.

    Returns:
        ``(covariates (n, n_c), covariate_names, static (n_s,), static_names)``.
    """
    config = FeatureConfig.parse(config)
    if config is FeatureConfig.PAST_ONLY:
        return np.zeros((len(frame), 0)), (), np.zeros(0), ()
    if config is FeatureConfig.NO_BUILDING:
        return frame.covariates, frame.covariate_names, np.zeros(0), ()
    return frame.covariates, frame.covariate_names, np.asarray(frame.static, dtype=float), frame.static_names


@dataclass
class WindowedDataset:
    """Stacked windows plus per-row provenance.

    Attributes:
        X: ``(n, (1 + n_c) * n_in + n_s)`` flat or ``(n, n_in, 1 + n_c + n_s)`` sequential.
        y: ``(n, n_out)`` standardized consumption.
        future: ``(n, n_future, n_c)`` covariates after the input window, or None.
        series_id: ``(n,)`` emitting series.
        start: ``(n,)`` row index of the first input within its series.
        t0: ``(n,)`` first input timestamp as integer hours since the epoch.
    """

    layout: Layout
    spec: WindowSpec
    X: np.ndarray
    y: np.ndarray
    future: np.ndarray | None
    series_id: np.ndarray
    start: np.ndarray
    t0: np.ndarray
    covariate_names: tuple[str, ...]
    static_names: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.y)

    @property
    def n_c(self) -> int:
        return len(self.covariate_names)

    @property
    def n_s(self) -> int:
        return len(self.static_names)

    @property
    def n_features(self) -> int:
        """Per-timestep feature count of the sequential layout."""
        return 1 + self.n_c + self.n_s

    def subset(self, idx) -> "WindowedDataset":
        idx = np.asarray(idx)
        return WindowedDataset(self.layout, self.spec, self.X[idx], self.y[idx],
                               None if self.future is None else self.future[idx],
                               self.series_id[idx], self.start[idx], self.t0[idx],
                               self.covariate_names, self.static_names)

    def last_observed(self, k: int) -> np.ndarray:
        """The final ``k`` input consumption values per row, oldest first."""
        if k > self.spec.n_in:
            raise ValueError(f"need {k} observed values but windows only hold {self.spec.n_in}")
        if self.layout is Layout.FLAT:
            return self.X[:, self.spec.n_in - k:self.spec.n_in]
        return self.X[:, self.spec.n_in - k:, 0]

    def input_hours(self) -> np.ndarray:
        return self.t0[:, None] + np.arange(self.spec.n_in)

    def target_hours(self) -> np.ndarray:
        return self.t0[:, None] + self.spec.n_in + np.arange(self.spec.n_out)

    def as_layout(self, layout) -> "WindowedDataset":
        layout = Layout(layout)
        if layout is self.layout:
            return self
        conv = sequential_to_flat if layout is Layout.FLAT else flat_to_sequential
        X = conv(self.X, self.spec.n_in, 1 + self.n_c, self.n_s)
        return WindowedDataset(layout, self.spec, X, self.y, self.future, self.series_id, self.start, self.t0,
                               self.covariate_names, self.static_names)


def sequential_to_flat(X: np.ndarray, n_in: int, c: int, n_s: int) -> np.ndarray:
    n = X.shape[0]
    series = X[:, :, :c].transpose(0, 2, 1).reshape(n, c * n_in)
    return np.concatenate([series, X[:, 0, c:]], axis=1)


def flat_to_sequential(X: np.ndarray, n_in: int, c: int, n_s: int) -> np.ndarray:
    n = X.shape[0]
    series = X[:, :c * n_in].reshape(n, c, n_in).transpose(0, 2, 1)
    static = np.broadcast_to(X[:, None, c * n_in:], (n, n_in, n_s))
    return np.concatenate([series, static], axis=2)


def empty_dataset(spec: WindowSpec, layout, covariate_names=(), static_names=()) -> WindowedDataset:
    layout = Layout(layout)
    c, n_s = 1 + len(covariate_names), len(static_names)
    X = np.zeros((0, c * spec.n_in + n_s)) if layout is Layout.FLAT else np.zeros((0, spec.n_in, c + n_s))
    future = np.zeros((0, spec.n_future, c - 1)) if spec.n_future else None
    return WindowedDataset(layout, spec, X, np.zeros((0, spec.n_out)), future, np.zeros(0, dtype=object),
                           np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64),
                           tuple(covariate_names), tuple(static_names))


def make_windows(frame: FeatureFrame, spec: WindowSpec, layout=Layout.SEQUENTIAL,
                 starts: np.ndarray | None = None) -> WindowedDataset:
    """Cut every step-1 window from one frame (or only those starting at ``starts``).

    A frame shorter than ``n_in + reach`` yields an empty dataset.
    """
    layout = Layout(layout)
    covs, cov_names, static, static_names = apply_feature_config(frame, spec.feature_config)
    count = spec.window_count(len(frame))
    starts = np.arange(count) if starts is None else np.asarray(starts, dtype=np.int64)
    if count == 0 or len(starts) == 0:
        if count == 0:
            log.info("%s: %d rows is too short for n_in=%d + %d; no windows", frame.series_id, len(frame),
                     spec.n_in, spec.reach)
        return empty_dataset(spec, layout, cov_names, static_names)
    if starts.min() < 0 or starts.max() >= count:
        raise IndexError("window start out of range")
    idx_in = starts[:, None] + np.arange(spec.n_in)
    idx_out = starts[:, None] + spec.n_in + np.arange(spec.n_out)
    series = np.concatenate([frame.consumption[:, None], covs], axis=1)  # (L, c)
    seq = series[idx_in]  # (n, n_in, c)
    n = len(starts)
    if layout is Layout.FLAT:
        X = np.concatenate([seq.transpose(0, 2, 1).reshape(n, -1), np.tile(static, (n, 1))], axis=1)
    else:
        X = np.concatenate([seq, np.broadcast_to(static, (n, spec.n_in, len(static)))], axis=2)
    future = None
    if spec.n_future:
        future = covs[starts[:, None] + spec.n_in + np.arange(spec.n_future)]
    hours = frame.timestamps.astype("datetime64[h]").astype(np.int64)
    return WindowedDataset(layout, spec, np.ascontiguousarray(X), frame.consumption[idx_out], future,
                           np.full(n, frame.series_id, dtype=object), starts, hours[starts],
                           cov_names, static_names)


def concat_datasets(parts: list[WindowedDataset]) -> WindowedDataset:
    if not parts:
        raise ValueError("nothing to concatenate")
    first = parts[0]
    for p in parts[1:]:
        if p.layout is not first.layout or p.spec != first.spec or p.covariate_names != first.covariate_names \
                or p.static_names != first.static_names:
            raise ValueError("datasets disagree on layout, spec or columns")
    return WindowedDataset(
        first.layout, first.spec,
        np.concatenate([p.X for p in parts]), np.concatenate([p.y for p in parts]),
        None if first.future is None else np.concatenate([p.future for p in parts]),
        np.concatenate([p.series_id for p in parts]), np.concatenate([p.start for p in parts]),
        np.concatenate([p.t0 for p in parts]), first.covariate_names, first.static_names,
    )


@dataclass(frozen=True)
class SplitPlan:
    """Window-index partition of one series.

    ``n_train/n_val/n_test`` follow the ratio arithmetic; the first
    ``embargo`` windows of val and test are then dropped so that no row used
    by an earlier partition is a target of a later one.
    """

    n_windows: int
    n_train: int
    n_val: int
    n_test: int
    embargo: int
    train_only: bool = False

    @property
    def train(self) -> np.ndarray:
        return np.arange(self.n_train)

    @property
    def val(self) -> np.ndarray:
        return np.arange(self.n_train + self.embargo, self.n_train + self.n_val)

    @property
    def test(self) -> np.ndarray:
        return np.arange(self.n_train + self.n_val + self.embargo, self.n_windows)

    def fit_stop(self, spec: WindowSpec) -> int:
        """One past the last row touched by any train window."""
        return self.n_train - 1 + spec.n_in + spec.reach if self.n_train else 0


def split_sizes(n_windows: int, ratios=SPLIT_RATIOS) -> tuple[int, int, int]:
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1) > 1e-9:
        raise ValueError(f"ratios must be three non-negative numbers summing to 1; got {ratios}")
    # small slack keeps e.g. 0.8 * 1000 from flooring to 799
    n_train = int(np.floor(n_windows * ratios[0] + 1e-9))
    n_val = int(np.floor(n_windows * ratios[1] + 1e-9))
    return n_train, n_val, n_windows - n_train - n_val


def chronological_split(n_windows: int, spec: WindowSpec, ratios=SPLIT_RATIOS, series_id: str = "") -> SplitPlan:
    n_train, n_val, n_test = split_sizes(n_windows, ratios)
    embargo = spec.reach - 1
    if n_train < 1 or n_val - embargo < 1 or n_test - embargo < 1:
        if n_windows:
            warnings.warn(f"{series_id}: {n_windows} windows cannot fill three partitions; "
                          "series assigned to train", DataQualityWarning, stacklevel=2)
        return SplitPlan(n_windows, n_windows, 0, 0, 0, train_only=True)
    return SplitPlan(n_windows, n_train, n_val, n_test, embargo)


@dataclass
class SeriesSplitReport:
    series_id: str
    length: int
    n_windows: int
    n_train: int
    n_val: int
    n_test: int
    embargo: int
    fit_stop: int
    note: str = ""


@dataclass
class SplitDatasets:
    train: WindowedDataset
    val: WindowedDataset
    test: WindowedDataset
    frames: dict[str, FeatureFrame]  # standardized
    stats: dict[str, Standardization]
    report: list[SeriesSplitReport] = field(default_factory=list)

    def test_mean_consumption(self) -> dict[str, float]:
        """Mean raw kWh over each series' test target rows."""
        out = {}
        for sid in np.unique(self.test.series_id):
            frame = self.frames[sid]
            rows = self.test.start[self.test.series_id == sid][:, None] + self.test.spec.n_in \
                + np.arange(self.test.spec.n_out)
            out[sid] = float(frame.raw_consumption[np.unique(rows)].mean())
        return out


def build_datasets(frames: list[FeatureFrame], spec: WindowSpec, layout=Layout.SEQUENTIAL,
                   ratios=SPLIT_RATIOS) -> SplitDatasets:
    """Split each series, standardize on its train rows, then window and pool.

    Order matters: the split boundary decides the standardization fit range,
    and windows are cut from the standardized frame.
    """
    layout = Layout(layout)
    parts = {"train": [], "val": [], "test": []}
    std_frames, stats, report = {}, {}, []
    for frame in frames:
        n = spec.window_count(len(frame))
        if n == 0:
            report.append(SeriesSplitReport(frame.series_id, len(frame), 0, 0, 0, 0, 0, 0, "too short"))
            continue
        plan = chronological_split(n, spec, ratios, frame.series_id)
        fit_stop = plan.fit_stop(spec)
        standardized = apply_standardization(frame, fit_standardization(frame, fit_stop))
        std_frames[frame.series_id] = standardized
        stats[frame.series_id] = standardized.standardization
        for name, starts in (("train", plan.train), ("val", plan.val), ("test", plan.test)):
            if len(starts):
                parts[name].append(make_windows(standardized, spec, layout, starts))
        report.append(SeriesSplitReport(frame.series_id, len(frame), n, len(plan.train), len(plan.val),
                                        len(plan.test), plan.embargo, fit_stop,
                                        "train only" if plan.train_only else ""))
    if not parts["train"]:
        raise ValueError("no series long enough to produce a training window")
    names = parts["train"][0].covariate_names, parts["train"][0].static_names

    def pool(items):
        return concat_datasets(items) if items else empty_dataset(spec, layout, *names)

    return SplitDatasets(pool(parts["train"]), pool(parts["val"]), pool(parts["test"]), std_frames, stats, report)


def leakage_violations(split: SplitDatasets) -> int:
    """Count (series, earlier partition, later partition) pairs where rows used earlier are later targets."""
    spec = split.train.spec
    order = [split.train, split.val, split.test]
    bad = 0
    for sid in split.stats:
        last_used = None
        for part in order:
            mask = part.series_id == sid
            if not mask.any():
                continue
            t0 = part.t0[mask]
            first_target = int(t0.min()) + spec.n_in
            if last_used is not None and last_used >= first_target:
                bad += 1
            used = int(t0.max()) + spec.n_in + spec.reach - 1
            last_used = used if last_used is None else max(last_used, used)
    return bad
