"""Forecasting models with a shared interface, parameter counting and checkpoints."""

from __future__ import annotations

import numpy as np

from .base import FCN, Forecaster, LSTMForecaster, NaiveForecaster, naive_forecast
from .checkpoint import load_checkpoint, save_checkpoint
from .counting import count_parameters, itemize_parameters
from .layers import Module
from .spec import DESK_DEFAULTS, ModelKind, ModelSpec, desk_spec, reference_spec
from .transformer import TransformerForecaster
from .xlstm import XLSTMForecaster, mlstm_parallel

_CLASSES = {
    ModelKind.NAIVE: NaiveForecaster,
    ModelKind.FCN: FCN,
    ModelKind.LSTM: LSTMForecaster,
    ModelKind.XLSTM: XLSTMForecaster,
    ModelKind.TE: TransformerForecaster,
}


def build_model(spec: ModelSpec, seed: int | np.random.SeedSequence | None = None) -> Forecaster:
    """Instantiate ``spec``; with a seed, parameters are Glorot-initialised deterministically."""
    model = _CLASSES[spec.kind](spec)
    if seed is not None:
        from ..training.init import initialize
        initialize(model, seed)
    return model


def model_from_checkpoint(path) -> tuple[Forecaster, dict]:
    spec, state, meta = load_checkpoint(path)
    model = build_model(spec)
    model.load_state_dict(state)
    return model, meta


__all__ = [
    "FCN", "Forecaster", "LSTMForecaster", "NaiveForecaster", "naive_forecast", "load_checkpoint",
    "save_checkpoint", "count_parameters", "itemize_parameters", "Module", "DESK_DEFAULTS", "ModelKind",
    "ModelSpec", "desk_spec", "reference_spec", "TransformerForecaster", "XLSTMForecaster",
    "mlstm_parallel", "build_model", "model_from_checkpoint",
]
