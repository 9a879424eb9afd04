"""Grid and random hyperparameter search over model, window and loop settings."""

from __future__ import annotations

import csv
import itertools
import logging
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .. import models as zoo
from ..data.types import FeatureFrame
from ..evaluation import ForecastSet, mae, rmse
from ..windowing import WindowSpec, build_datasets
from .loop import TrainConfig, train

log = logging.getLogger(__name__)

MODEL_AXES = ("hidden_size", "num_heads", "num_blocks", "dropout", "n_in", "n_future")
TRAIN_AXES = ("batch_size", "epochs", "learning_rate")
MAX_RESAMPLE = 100


@dataclass
class SweepSpec:
    """Search space.

    Attributes:
        grid: Axis name to a list of values; the cartesian product is enumerated.
        distributions: Axis name to ``("choice", values)``, ``("int", low, high)`` (inclusive),
            ``("uniform", low, high)`` or ``("loguniform", low, high)``; used when ``grid`` is empty.
        budget: Maximum number of trials.
        seed: Master seed for sampling and per-trial seeds.
    """

    grid: dict[str, list] = field(default_factory=dict)
    distributions: dict[str, tuple] = field(default_factory=dict)
    budget: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.budget is not None and self.budget < 1:
            raise ValueError("budget must be >= 1")
        if not self.grid and not self.distributions:
            raise ValueError("sweep needs a grid or distributions")
        if not self.grid and self.budget is None:
            raise ValueError("random search needs a budget")
        unknown = (set(self.grid) | set(self.distributions)) - set(MODEL_AXES) - set(TRAIN_AXES)
        if unknown:
            raise ValueError(f"unknown sweep axes {sorted(unknown)}")


@dataclass
class TrialResult:
    index: int
    params: dict
    seed: int
    val_rmse: float = float("inf")
    val_mae: float = float("inf")
    runtime_s: float = 0.0
    status: str = "ok"
    error: str = ""


def _draw(rng: np.random.Generator, dist: tuple):
    kind = dist[0]
    if kind == "choice":
        values = list(dist[1])
        return values[int(rng.integers(len(values)))]
    if kind == "int":
        return int(rng.integers(dist[1], dist[2] + 1))
    if kind == "uniform":
        return float(rng.uniform(dist[1], dist[2]))
    if kind == "loguniform":
        return float(np.exp(rng.uniform(np.log(dist[1]), np.log(dist[2]))))
    raise ValueError(f"unknown distribution {kind!r}")


def _apply(point: dict, base_model: zoo.ModelSpec, base_train: TrainConfig) -> tuple[zoo.ModelSpec, TrainConfig]:
    mspec = base_model.with_(**{k: v for k, v in point.items() if k in MODEL_AXES})
    tcfg = replace(base_train, **{k: v for k, v in point.items() if k in TRAIN_AXES})
    return mspec, tcfg


def sample_points(spec: SweepSpec, base_model: zoo.ModelSpec, base_train: TrainConfig) -> list[dict]:
    """Enumerate (grid) or draw (random) points; every point yields a valid spec and config."""
    if spec.grid:
        names = list(spec.grid)
        points = [dict(zip(names, combo)) for combo in itertools.product(*(spec.grid[n] for n in names))]
        bad = []
        for p in points:
            try:
                _apply(p, base_model, base_train)
            except ValueError as exc:
                bad.append(f"{p}: {exc}")
        if bad:
            raise ValueError("invalid grid points:\n" + "\n".join(bad))
        return points[:spec.budget] if spec.budget else points
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed).spawn(1)[0])
    points = []
    for _ in range(spec.budget):
        for _attempt in range(MAX_RESAMPLE):
            p = {name: _draw(rng, dist) for name, dist in spec.distributions.items()}
            try:
                _apply(p, base_model, base_train)
            except ValueError:
                continue
            points.append(p)
            break
        else:
            raise ValueError("could not draw a valid point; the distributions are inconsistent with the base spec")
    return points


def sweep(spec: SweepSpec, frames: list[FeatureFrame], base_model: zoo.ModelSpec, base_train: TrainConfig,
          feature_config="all") -> list[TrialResult]:
    """Train one model per point and rank by validation RMSE in kWh (failed trials last).

    A trial that raises is recorded with its error and the sweep moves on.
    """
    points = sample_points(spec, base_model, base_train)
    trial_seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(spec.seed).spawn(len(points) + 1)[1:]]
    cache: dict[tuple, object] = {}
    results = []
    for i, (point, seed) in enumerate(zip(points, trial_seeds)):
        result = TrialResult(i, point, seed)
        start = time.perf_counter()
        try:
            mspec, tcfg = _apply(point, base_model, base_train)
            tcfg = replace(tcfg, seed=seed)
            wkey = (mspec.n_in, mspec.n_out, mspec.n_future)
            if wkey not in cache:
                cache[wkey] = build_datasets(frames, WindowSpec(mspec.n_in, mspec.n_out, mspec.n_future,
                                                                feature_config), "sequential")
            split = cache[wkey]
            mspec = mspec.with_(n_c=split.train.n_c, n_s=split.train.n_s)
            tr, va = split.train.as_layout(mspec.layout), split.val.as_layout(mspec.layout)
            if len(va) == 0:
                raise ValueError("validation set is empty")
            trained = train(zoo.build_model(mspec, seed), tr, va, tcfg)
            pred = trained.model.predict(va.X, va.future)
            fs = ForecastSet.from_standardized(va.series_id, va.start, va.y, pred, split.stats)
            result.val_rmse, result.val_mae = rmse(fs), mae(fs)
        except Exception as exc:  # a failed trial must not end the sweep
            result.status, result.error = "failed", f"{type(exc).__name__}: {exc}"
            log.warning("trial %d failed: %s", i, result.error)
        result.runtime_s = time.perf_counter() - start
        results.append(result)
    return sorted(results, key=lambda r: (r.status != "ok", r.val_rmse, r.index))


def write_trials(results: list[TrialResult], path: str | os.PathLike) -> None:
    axes = sorted({k for r in results for k in r.params})
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rank", "trial", *axes, "seed", "val_rmse", "val_mae", "runtime_s", "status", "error"])
        for rank, r in enumerate(results, start=1):
            w.writerow([rank, r.index, *(r.params.get(a, "") for a in axes), r.seed, repr(r.val_rmse),
                        repr(r.val_mae), repr(r.runtime_s), r.status, r.error])
