"""Mini-batch training with MSE loss, seeded shuffling and best-validation selection."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from ..models import Forecaster, ModelSpec
from ..tensor_core import NonFiniteError, Tensor, backward, ops
from ..windowing import WindowedDataset
from .optim import Adam

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 64
    epochs: int = 10
    learning_rate: float = 0.001
    seed: int = 0
    shuffle: bool = True
    early_stop: tuple[int, float] | None = None  # (patience, min_delta) on validation loss

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.early_stop is not None:
            patience, delta = self.early_stop
            if patience < 1 or delta < 0:
                raise ValueError("early_stop needs patience >= 1 and min_delta >= 0")
            object.__setattr__(self, "early_stop", (int(patience), float(delta)))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainingHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    epoch_seconds: list[float] = field(default_factory=list)
    best_epoch: int = -1  # zero-based; -1 when nothing was trained

    @property
    def epochs_run(self) -> int:
        return len(self.train_loss)

    @property
    def total_seconds(self) -> float:
        return float(sum(self.epoch_seconds))

    def rows(self) -> list[dict]:
        return [{"epoch": e + 1, "train_loss": tl, "val_loss": vl, "seconds": s}
                for e, (tl, vl, s) in enumerate(zip(self.train_loss, self.val_loss, self.epoch_seconds))]


@dataclass
class TrainedModel:
    spec: ModelSpec
    model: Forecaster  # holds the selected (best-validation) parameters
    seed: int
    config: TrainConfig
    history: TrainingHistory

    def state(self) -> dict[str, np.ndarray]:
        return self.model.state_dict()

    def meta(self) -> dict:
        return {"seed": self.seed, "train_config": self.config.to_dict(), "epochs_run": self.history.epochs_run,
                "best_epoch": self.history.best_epoch, "wall_clock_seconds": self.history.total_seconds,
                "train_loss": self.history.train_loss, "val_loss": self.history.val_loss,
                "epoch_seconds": self.history.epoch_seconds}


def mse_loss(pred: Tensor, target: np.ndarray) -> Tensor:
    diff = ops.sub(pred, target)
    return ops.mean(ops.mul(diff, diff))


def evaluate_loss(model: Forecaster, data: WindowedDataset, batch_size: int = 1024) -> float:
    """Mean squared error over all (window, step) pairs, dropout off."""
    if len(data) == 0:
        return float("nan")
    pred = model.predict(data.X, data.future, batch_size)
    return float(np.mean((pred - data.y) ** 2))


def train(model: Forecaster, train_data: WindowedDataset, val_data: WindowedDataset | None,
          config: TrainConfig) -> TrainedModel:
    """Fit ``model`` in place and return it loaded with its best-validation parameters.

    Args:
        model: An initialised forecaster whose layout matches the datasets.
        train_data: Shuffled each epoch with a generator derived from ``config.seed``.
        val_data: Used for selection and early stopping; when empty the last epoch is kept.
        config: Loop settings.

    Raises:
        TrainingError: A batch produced a non-finite value; the message names the epoch and batch.
    """
    history = TrainingHistory()
    if not model.trainable:
        return TrainedModel(model.spec, model, config.seed, config, history)
    if len(train_data) == 0:
        raise TrainingError("training set is empty")
    if train_data.layout.value != model.spec.layout:
        raise ValueError(f"{model.spec.kind.value} expects {model.spec.layout} windows, got {train_data.layout.value}")
    shuffle_seq, dropout_seq = np.random.SeedSequence(config.seed).spawn(2)
    shuffle_rng, dropout_rng = np.random.default_rng(shuffle_seq), np.random.default_rng(dropout_seq)
    opt = Adam(model.parameters(), lr=config.learning_rate)
    has_val = val_data is not None and len(val_data) > 0
    best_loss, best_state, stale = np.inf, None, 0
    n = len(train_data)

    for epoch in range(config.epochs):
        start = time.perf_counter()
        order = shuffle_rng.permutation(n) if config.shuffle else np.arange(n)
        total = 0.0
        for b, a in enumerate(range(0, n, config.batch_size)):
            idx = order[a:a + config.batch_size]
            fut = None if train_data.future is None else train_data.future[idx]
            opt.zero_grad()
            try:
                loss = mse_loss(model(train_data.X[idx], fut, training=True, rng=dropout_rng), train_data.y[idx])
                backward(loss)
            except NonFiniteError as exc:
                raise TrainingError(f"non-finite value at epoch {epoch + 1}, batch {b}: {exc}") from exc
            if not np.isfinite(loss.data):
                raise TrainingError(f"loss is NaN at epoch {epoch + 1}, batch {b}")
            opt.step()
            total += loss.item() * len(idx)
        train_loss = total / n
        val_loss = evaluate_loss(model, val_data) if has_val else float("nan")
        history.train_loss.append(train_loss)
        history.val_loss.append(val_loss)
        history.epoch_seconds.append(time.perf_counter() - start)
        log.info("epoch %d/%d train %.6f val %.6f (%.2fs)", epoch + 1, config.epochs, train_loss, val_loss,
                 history.epoch_seconds[-1])

        score = val_loss if has_val else train_loss
        improved = score < best_loss - (config.early_stop[1] if config.early_stop else 0.0)
        if score < best_loss:
            best_loss, best_state, history.best_epoch = score, model.state_dict(), epoch
        stale = 0 if improved else stale + 1
        if config.early_stop and stale >= config.early_stop[0]:
            log.info("early stop after epoch %d", epoch + 1)
            break

    if has_val:
        model.load_state_dict(best_state)
    else:
        history.best_epoch = history.epochs_run - 1
    return TrainedModel(model.spec, model, config.seed, config, history)
