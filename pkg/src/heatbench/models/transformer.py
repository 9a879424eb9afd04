"""Transformer-encoder forecaster: up-projection, learned positions, post-norm encoder blocks, mean pooling, MLP head."""

from __future__ import annotations

import math

import numpy as np

from ..tensor_core import Tensor, ops
from .base import Forecaster
from .layers import LayerNorm, Linear, Module
from .spec import ModelSpec


class SelfAttention(Module):
    def __init__(self, d: int, heads: int):
        super().__init__()
        self.d, self.heads, self.head_dim = d, heads, d // heads
        self.query = Linear(d, d)
        self.key = Linear(d, d)
        self.value = Linear(d, d)
        self.proj = Linear(d, d)
        self.last_weights: np.ndarray | None = None

    def _split(self, x: Tensor) -> Tensor:
        b, t, _ = x.shape
        return ops.transpose(ops.reshape(x, (b, t, self.heads, self.head_dim)), (0, 2, 1, 3))

    def __call__(self, x: Tensor) -> Tensor:
        b, t, _ = x.shape
        q, k, v = self._split(self.query(x)), self._split(self.key(x)), self._split(self.value(x))
        scores = ops.mul(ops.matmul(q, ops.swapaxes(k, -1, -2)), 1.0 / math.sqrt(self.head_dim))
        weights = ops.softmax(scores, axis=-1)
        self.last_weights = weights.data
        ctx = ops.reshape(ops.transpose(ops.matmul(weights, v), (0, 2, 1, 3)), (b, t, self.d))
        return self.proj(ctx)


class EncoderBlock(Module):
    def __init__(self, d: int, heads: int, ffn_ratio: int):
        super().__init__()
        self.attention = SelfAttention(d, heads)
        self.norm1 = LayerNorm(d)
        self.ffn_in = Linear(d, ffn_ratio * d)
        self.ffn_out = Linear(ffn_ratio * d, d)
        self.norm2 = LayerNorm(d)

    def __call__(self, x: Tensor) -> Tensor:
        x = self.norm1(ops.add(x, self.attention(x)))
        return self.norm2(ops.add(x, self.ffn_out(ops.relu(self.ffn_in(x)))))


class TransformerForecaster(Forecaster):
    def __init__(self, spec: ModelSpec):
        super().__init__(spec)
        d = spec.hidden_size
        self.embed = Linear(spec.n_features, d)
        self.param("position", (spec.n_in, d), "glorot")
        self.blocks = []
        for j in range(spec.num_blocks):
            block = EncoderBlock(d, spec.num_heads, spec.ffn_ratio)
            setattr(self, f"block{j}", block)
            self.blocks.append(block)
        self.head_hidden = Linear(d, d)
        self.head_out = Linear(d, spec.n_out)

    def attention_weights(self) -> list[np.ndarray]:
        """Softmax weights ``(batch, heads, n_in, n_in)`` of each block from the latest forward."""
        return [blk.attention.last_weights for blk in self.blocks]

    def forward(self, x, future=None, training=False, rng=None):
        h = ops.add(self.embed(x), self.position)
        for block in self.blocks:
            h = block(h)
        pooled = ops.mean(h, axis=1)
        z = ops.dropout(ops.relu(self.head_hidden(pooled)), self.spec.dropout, rng, training)
        return self.head_out(z)
