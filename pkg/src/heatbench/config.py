"""Run configuration: one JSON document, with command-line flags taking precedence.

Precedence, lowest to highest: built-in defaults, the ``--config`` file, flags.
"""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass
from pathlib import Path

from .data import CleaningConfig
from .models import ModelKind, ModelSpec, desk_spec, reference_spec
from .resources import DEFAULT_CARBON_INTENSITY, DEVICE_PROFILES, DeviceProfile
from .training import SweepSpec, TrainConfig
from .windowing import FeatureConfig, WindowSpec

FROZEN_CONFIG = "config.json"

DEFAULTS: dict = {
    "data": {"path": None, "synth": {"n_buildings": 5, "days": 120, "seed": 0, "long_gaps": 0}},
    "cleaning": {},
    "window": {"n_in": 24, "horizon": 3, "n_future": 0, "feature_config": 3},
    "model": {"kind": "fcn", "scale": "desk"},
    "train": {"batch_size": 64, "epochs": 10, "learning_rate": 0.001, "shuffle": True, "early_stop": None},
    "seeds": [0],
    "device": "laptop_cpu",
    "carbon_intensity": DEFAULT_CARBON_INTENSITY,
    "out": "runs/default",
    "sweep": None,
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def parse_seeds(text: str) -> list[int]:
    """``"1,2,3"`` or a range ``"0-4"`` (inclusive)."""
    try:
        if "-" in text.strip().lstrip("-"):
            lo, hi = text.split("-", 1)
            return list(range(int(lo), int(hi) + 1))
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse seeds {text!r}") from None


@dataclass
class RunConfig:
    raw: dict
    base_dir: Path  # relative data paths resolve against the config file's directory

    @classmethod
    def load(cls, path: str | os.PathLike | None = None, overrides: dict | None = None) -> "RunConfig":
        raw, base_dir = DEFAULTS, Path.cwd()
        if path is not None:
            p = Path(path)
            if not p.exists():
                raise ConfigError(f"config file {p} does not exist")
            try:
                user = json.loads(p.read_text())
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{p}: invalid JSON ({exc})") from None
            unknown = set(user) - set(DEFAULTS)
            if unknown:
                raise ConfigError(f"{p}: unknown keys {sorted(unknown)}")
            raw, base_dir = _merge(raw, user), p.parent.resolve()
        cfg = cls(_merge(raw, overrides or {}), base_dir)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if self.raw["device"] not in DEVICE_PROFILES:
            raise ConfigError(f"unknown device {self.raw['device']!r}; choose from {sorted(DEVICE_PROFILES)}")
        if self.raw["model"].get("scale", "desk") not in ("desk", "reference"):
            raise ConfigError("model.scale must be 'desk' or 'reference'")
        path = self.data_path
        if path is not None and not path.exists():
            raise ConfigError(f"data path {path} does not exist")
        try:
            self.window_spec()
            self.train_config()
            self.cleaning_config()
            ModelKind(self.raw["model"]["kind"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    # accessors

    @property
    def seeds(self) -> list[int]:
        return [int(s) for s in self.raw["seeds"]]

    @property
    def out_dir(self) -> Path:
        return Path(self.raw["out"])

    @property
    def data_path(self) -> Path | None:
        p = self.raw["data"].get("path")
        if p is None:
            return None
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def synth(self) -> dict:
        return dict(self.raw["data"]["synth"])

    @property
    def kind(self) -> ModelKind:
        return ModelKind(self.raw["model"]["kind"])

    @property
    def horizon(self) -> int:
        return int(self.raw["window"]["horizon"])

    @property
    def device(self) -> DeviceProfile:
        return DEVICE_PROFILES[self.raw["device"]]

    @property
    def carbon_intensity(self) -> float:
        return float(self.raw["carbon_intensity"])

    def cleaning_config(self) -> CleaningConfig:
        return CleaningConfig(**self.raw["cleaning"])

    def train_config(self, seed: int = 0) -> TrainConfig:
        t = dict(self.raw["train"])
        if t.get("early_stop") is not None:
            t["early_stop"] = tuple(t["early_stop"])
        return TrainConfig(seed=seed, **t)

    def _model_overrides(self) -> dict:
        return {k: v for k, v in self.raw["model"].items() if k not in ("kind", "scale")}

    def window_spec(self, kind: ModelKind | None = None) -> WindowSpec:
        """Windowing for ``kind``; reference-scale models carry their own look-back and future steps."""
        kind = kind or self.kind
        w = self.raw["window"]
        n_in, n_future = int(w["n_in"]), int(w.get("n_future", 0))
        if self.raw["model"].get("scale") == "reference" and kind is not ModelKind.NAIVE:
            ref = reference_spec(kind, self.horizon, n_c=1)
            n_in, n_future = ref.n_in, ref.n_future
        n_in = int(self._model_overrides().get("n_in", n_in))
        n_future = int(self._model_overrides().get("n_future", n_future))
        features = FeatureConfig.parse(w["feature_config"])
        if kind not in (ModelKind.FCN, ModelKind.LSTM) or features is FeatureConfig.PAST_ONLY:
            n_future = 0
        return WindowSpec(n_in, self.horizon, n_future, features)

    def model_spec(self, n_c: int, n_s: int, kind: ModelKind | None = None) -> ModelSpec:
        kind = kind or self.kind
        ws = self.window_spec(kind)
        extra = {k: v for k, v in self._model_overrides().items() if k not in ("n_in", "n_future")}
        if self.raw["model"].get("scale") == "reference" and kind is not ModelKind.NAIVE:
            base = reference_spec(kind, self.horizon, n_c, n_s)
            return base.with_(n_in=ws.n_in, n_future=ws.n_future, **extra)
        return desk_spec(kind, ws.n_in, ws.n_out, n_c, n_s, n_future=ws.n_future, **extra)

    def sweep_spec(self) -> SweepSpec:
        s = self.raw.get("sweep")
        if not s:
            raise ConfigError("config has no 'sweep' section")
        dists = {k: tuple(v) for k, v in s.get("distributions", {}).items()}
        return SweepSpec(grid=s.get("grid", {}), distributions=dists, budget=s.get("budget"), seed=s.get("seed", 0))

    def freeze(self, out_dir: str | os.PathLike | None = None) -> Path:
        """Write the resolved config so the run can be repeated from it alone."""
        out = Path(out_dir or self.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        raw = copy.deepcopy(self.raw)
        if self.data_path is not None:
            raw["data"]["path"] = str(self.data_path.resolve())
        (out / FROZEN_CONFIG).write_text(json.dumps(raw, indent=2, sort_keys=True))
        return out / FROZEN_CONFIG
