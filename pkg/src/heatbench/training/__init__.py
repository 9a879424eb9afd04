"""Initialisation, optimisation, the training loop and hyperparameter sweeps."""

from .init import glorot_init, initialize
from .optim import Adam, AdamState, adam_step
from .loop import TrainConfig, TrainedModel, TrainingError, TrainingHistory, evaluate_loss, mse_loss, train
from .sweep import SweepSpec, TrialResult, sample_points, sweep, write_trials

__all__ = [
    "glorot_init", "initialize", "Adam", "AdamState", "adam_step", "TrainConfig", "TrainedModel",
    "TrainingError", "TrainingHistory", "evaluate_loss", "mse_loss", "train", "SweepSpec", "TrialResult",
    "sample_points", "sweep", "write_trials",
]
