"""Common forecasting interface and the three simpler forecasters."""

from __future__ import annotations

import numpy as np

from ..tensor_core import Tensor, no_grad, ops
from .layers import Linear, Module
from .spec import ModelKind, ModelSpec


class Forecaster(Module):
    """Maps a batch of windows to ``(batch, n_out)`` standardized forecasts.

    Subclasses implement :meth:`forward`. ``future`` is ``(batch, n_future, n_c)``
    when the ModelSpec asks for known-future covariates.
    """

    trainable = True

    def __init__(self, spec: ModelSpec):
        super().__init__()
        self.spec = spec

    def forward(self, x: Tensor, future: Tensor | None = None, training: bool = False,
                rng: np.random.Generator | None = None) -> Tensor:
        raise NotImplementedError

    def __call__(self, x, future=None, training: bool = False, rng=None) -> Tensor:
        self._check_input(x, future)
        return self.forward(x if isinstance(x, Tensor) else Tensor(x), None if future is None else
                            (future if isinstance(future, Tensor) else Tensor(future)), training, rng)

    def predict(self, x, future=None, batch_size: int = 1024) -> np.ndarray:
        """Eval-mode forecasts as a numpy array, without recording a graph."""
        out = []
        with no_grad():
            for a in range(0, len(x), batch_size):
                fut = None if future is None else future[a:a + batch_size]
                out.append(self(x[a:a + batch_size], fut).data)
        return np.concatenate(out) if out else np.zeros((0, self.spec.n_out))

    def _check_input(self, x, future) -> None:
        s = self.spec
        shape = tuple(x.shape)
        expected = (s.flat_width,) if s.layout == "flat" else (s.n_in, s.n_features)
        if shape[1:] != expected:
            raise ValueError(f"{s.kind.value} expects {s.layout} rows of shape {expected}, got {shape[1:]}")
        if s.n_future:
            if future is None or tuple(future.shape[1:]) != (s.n_future, s.n_c):
                raise ValueError(f"{s.kind.value} needs future covariates of shape (batch, {s.n_future}, {s.n_c})")


class NaiveForecaster(Forecaster):
    """Repeats the last ``n_out`` observed consumption values."""

    trainable = False

    def __init__(self, spec: ModelSpec):
        if spec.n_out > spec.n_in:
            raise ValueError(f"naive forecast needs n_in >= n_out, got {spec.n_in} < {spec.n_out}")
        super().__init__(spec)

    def _check_input(self, x, future) -> None:
        if x.ndim not in (2, 3) or x.shape[1] < self.spec.n_in:
            raise ValueError(f"naive forecast needs {self.spec.n_in} observed values per row")

    def forward(self, x, future=None, training=False, rng=None):
        n_in, k = self.spec.n_in, self.spec.n_out
        if x.ndim == 2:
            return ops.getitem(x, (slice(None), slice(n_in - k, n_in)))
        return ops.getitem(x, (slice(None), slice(n_in - k, n_in), 0))


def naive_forecast(history: np.ndarray, n_out: int) -> np.ndarray:
    """Forecast the next ``n_out`` steps as the last ``n_out`` observations, oldest first."""
    history = np.asarray(history, dtype=float)
    if history.shape[-1] < n_out:
        raise ValueError(f"need at least {n_out} observations, got {history.shape[-1]}")
    return history[..., history.shape[-1] - n_out:].copy()


class FCN(Forecaster):
    """One ReLU hidden layer, dropout, linear output; future covariates are appended to the flat input."""

    def __init__(self, spec: ModelSpec):
        super().__init__(spec)
        self.hidden = Linear(spec.flat_width + spec.n_future * spec.n_c, spec.hidden_size)
        self.out = Linear(spec.hidden_size, spec.n_out)

    def forward(self, x, future=None, training=False, rng=None):
        if future is not None:
            x = ops.concat([x, ops.reshape(future, (x.shape[0], -1))], axis=1)
        h = ops.dropout(ops.relu(self.hidden(x)), self.spec.dropout, rng, training)
        return self.out(h)


class LSTMForecaster(Forecaster):
    """LSTM over the window; the last hidden state (plus future covariates) feeds a linear head."""

    def __init__(self, spec: ModelSpec):
        super().__init__(spec)
        h = spec.hidden_size
        self.param("input_weight", (spec.n_features, 4 * h), "glorot")
        self.param("recurrent_weight", (h, 4 * h), "glorot")
        # forget-gate bias starts at one, the usual remedy for early vanishing memory
        self.param("bias", (4 * h,), np.concatenate([np.zeros(h), np.ones(h), np.zeros(2 * h)]))
        self.out = Linear(h + spec.n_future * spec.n_c, spec.n_out)

    def hidden_states(self, x):
        gx = ops.add(ops.matmul(x, self.input_weight), self.bias)
        return ops.lstm_sequence(gx, self.recurrent_weight)

    def forward(self, x, future=None, training=False, rng=None):
        hs = self.hidden_states(x)
        last = ops.getitem(hs, (slice(None), -1))
        last = ops.dropout(last, self.spec.dropout, rng, training)
        if future is not None:
            last = ops.concat([last, ops.reshape(future, (x.shape[0], -1))], axis=1)
        return self.out(last)
