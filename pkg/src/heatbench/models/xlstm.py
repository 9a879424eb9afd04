"""xLSTM forecaster: input up-projection, a stack of mLSTM/sLSTM residual blocks, post-norm, flatten, linear head.

mLSTM block (pre-norm residual)::

    x_m, z = split(up(LN(x)))                 # each of width inner = 2d
    c = silu(conv(x_m))
    q, k = headwise(c); v = headwise(x_m)     # block size qkv_size
    i, f = linear(concat(q, k, v))            # one pre-activation per head and step
    h = cell(q, k, v, i, f)                   # stabilised parallel form
    out = x + down((norm(h) + skip * c) * silu(z))

sLSTM block (pre-norm residual, then gated feed-forward)::

    c = silu(conv(LN(x)))
    i, f from headwise(c); z, o from headwise(LN(x))
    y = x + groupnorm(recurrence(z, i, f, o))
    out = y + down(gelu(a) * b),  a, b = split(up(LN(y)))
"""

from __future__ import annotations

import math

import numpy as np

from ..tensor_core import Tensor, ops
from .base import Forecaster
from .layers import CausalConv1d, HeadwiseLinear, LayerNorm, Linear, Module, MultiHeadNorm
from .spec import ModelSpec

#: masked log-decay entries; exp() of it underflows to exactly zero
MASK_VALUE = -1e30
MLSTM_EPS = 1e-6


def ffn_width(d: int, factor: float = 1.3, multiple: int = 64) -> int:
    return int(math.ceil(factor * d / multiple) * multiple)


def mlstm_parallel(q: Tensor, k: Tensor, v: Tensor, igate: Tensor, fgate: Tensor) -> Tensor:
    """Stabilised parallel mLSTM cell.

    Args:
        q, k, v: ``(batch, heads, seq, head_dim)``.
        igate, fgate: ``(batch, heads, seq)`` gate pre-activations.

    Returns:
        ``(batch, heads, seq, head_dim)`` hidden states; step t depends only on steps <= t.
    """
    b, nh, t, dh = q.shape
    logf = ops.logsigmoid(fgate)
    # inclusive cumulative sum along time via an upper-triangular ones matrix
    cum = ops.reshape(ops.matmul(ops.reshape(logf, (b * nh, t)), np.triu(np.ones((t, t)))), (b, nh, t))
    rows = ops.broadcast_to(ops.reshape(cum, (b, nh, t, 1)), (b, nh, t, t))
    cols = ops.reshape(ops.sub(igate, cum), (b, nh, 1, t))
    log_d = ops.masked_fill(ops.add(rows, cols), np.triu(np.ones((t, t), dtype=bool), k=1), MASK_VALUE)
    max_log_d = ops.max_(log_d, axis=-1, keepdims=True)
    decay = ops.exp(ops.sub(log_d, max_log_d))
    scores = ops.mul(ops.matmul(q, ops.swapaxes(k, -1, -2)), 1.0 / math.sqrt(dh))
    weights = ops.mul(scores, decay)
    norm = ops.maximum(ops.abs_(ops.sum_(weights, axis=-1, keepdims=True)), ops.exp(ops.neg(max_log_d)))
    return ops.matmul(ops.div(weights, ops.add(norm, MLSTM_EPS)), v)


class MLSTMBlock(Module):
    def __init__(self, d: int, heads: int, conv_kernel: int, qkv_size: int):
        super().__init__()
        inner = 2 * d
        self.d, self.inner, self.heads = d, inner, heads
        self.norm = LayerNorm(d, bias=False)
        self.up = Linear(d, 2 * inner, bias=False)
        self.conv = CausalConv1d(inner, conv_kernel)
        self.q = HeadwiseLinear(inner, inner // qkv_size)
        self.k = HeadwiseLinear(inner, inner // qkv_size)
        self.v = HeadwiseLinear(inner, inner // qkv_size)
        self.igate = Linear(3 * inner, heads)
        self.fgate = Linear(3 * inner, heads)
        # forget gates start mostly open, spread across heads
        self.fgate._inits["bias"] = np.linspace(3.0, 6.0, heads)
        self.igate._inits["weight"] = "zeros"
        self.outnorm = MultiHeadNorm(heads, inner // heads)
        self.param("skip", (inner,), "ones")
        self.down = Linear(inner, d, bias=False)

    def _heads(self, x: Tensor) -> Tensor:
        b, t, _ = x.shape
        return ops.transpose(ops.reshape(x, (b, t, self.heads, self.inner // self.heads)), (0, 2, 1, 3))

    def __call__(self, x: Tensor) -> Tensor:
        b, t, _ = x.shape
        up = self.up(self.norm(x))
        x_m = ops.getitem(up, (slice(None), slice(None), slice(0, self.inner)))
        z = ops.getitem(up, (slice(None), slice(None), slice(self.inner, 2 * self.inner)))
        c = ops.silu(self.conv(x_m))
        q, k, v = self.q(c), self.k(c), self.v(x_m)
        qkv = ops.concat([q, k, v], axis=-1)
        ig = ops.transpose(self.igate(qkv), (0, 2, 1))
        fg = ops.transpose(self.fgate(qkv), (0, 2, 1))
        h = mlstm_parallel(self._heads(q), self._heads(k), self._heads(v), ig, fg)
        h = ops.reshape(ops.transpose(h, (0, 2, 1, 3)), (b, t, self.inner))
        h = ops.add(self.outnorm(h), ops.mul(c, self.skip))
        return ops.add(x, self.down(ops.mul(h, ops.silu(z))))


class SLSTMBlock(Module):
    def __init__(self, d: int, heads: int, conv_kernel: int):
        super().__init__()
        self.d, self.heads, self.head_dim = d, heads, d // heads
        self.norm = LayerNorm(d, bias=False)
        self.conv = CausalConv1d(d, conv_kernel)
        self.zgate = HeadwiseLinear(d, heads)
        self.igate = HeadwiseLinear(d, heads)
        self.fgate = HeadwiseLinear(d, heads)
        self.ogate = HeadwiseLinear(d, heads)
        self.param("recurrent", (heads, self.head_dim, 4 * self.head_dim), "glorot")
        fbias = np.tile(np.linspace(3.0, 6.0, self.head_dim), heads)
        self.param("bias", (4 * d,), np.concatenate([np.zeros(2 * d), fbias, np.zeros(d)]))
        self.groupnorm = MultiHeadNorm(heads, self.head_dim)
        width = ffn_width(d)
        self.ffn_width = width
        self.ffn_norm = LayerNorm(d, bias=False)
        self.ffn_up = Linear(d, 2 * width, bias=False)
        self.ffn_down = Linear(width, d, bias=False)

    def __call__(self, x: Tensor) -> Tensor:
        xn = self.norm(x)
        c = ops.silu(self.conv(xn))
        gx = ops.concat([self.zgate(xn), self.igate(c), self.fgate(c), self.ogate(xn)], axis=-1)
        h = ops.slstm_sequence(ops.add(gx, self.bias), self.recurrent)
        y = ops.add(x, self.groupnorm(h))
        u = self.ffn_up(self.ffn_norm(y))
        a = ops.getitem(u, (slice(None), slice(None), slice(0, self.ffn_width)))
        g = ops.getitem(u, (slice(None), slice(None), slice(self.ffn_width, 2 * self.ffn_width)))
        return ops.add(y, self.ffn_down(ops.mul(ops.gelu(a), g)))


class XLSTMForecaster(Forecaster):
    def __init__(self, spec: ModelSpec):
        super().__init__(spec)
        d = spec.hidden_size
        self.embed = Linear(spec.n_features, d)
        self.blocks = []
        for j, kind in enumerate(spec.block_pattern):
            block = (MLSTMBlock(d, spec.num_heads, spec.conv_kernel, spec.qkv_size) if kind == "m"
                     else SLSTMBlock(d, spec.num_heads, spec.conv_kernel))
            setattr(self, f"block{j}", block)
            self.blocks.append(block)
        self.post_norm = LayerNorm(d)
        self.head = Linear(d * spec.n_in, spec.n_out)

    def sequence_features(self, x) -> Tensor:
        """Post-norm block output ``(batch, n_in, d)`` before flattening."""
        h = self.embed(x if isinstance(x, Tensor) else Tensor(x))
        for block in self.blocks:
            h = block(h)
        return self.post_norm(h)

    def forward(self, x, future=None, training=False, rng=None):
        h = self.sequence_features(x)
        flat = ops.reshape(h, (h.shape[0], self.spec.n_in * self.spec.hidden_size))
        return self.head(ops.dropout(flat, self.spec.dropout, rng, training))
