"""Closed-form trainable-parameter counts, derived from a ModelSpec alone.

These formulas are written independently of the layer code so that
comparing them with the scalars of an instantiated model is a real check.
"""

from __future__ import annotations

from .spec import ModelKind, ModelSpec
from .xlstm import ffn_width


def _linear(n_in: int, n_out: int, bias: bool = True) -> int:
    return n_in * n_out + (n_out if bias else 0)


def _mlstm_block(d: int, heads: int, kernel: int, qkv: int) -> list[tuple[str, int]]:
    inner = 2 * d
    return [
        ("norm", d),
        ("up", _linear(d, 2 * inner, bias=False)),
        ("conv", inner * kernel + inner),
        ("qkv", 3 * inner * qkv),
        ("gates", 2 * _linear(3 * inner, heads)),
        ("outnorm", inner),
        ("skip", inner),
        ("down", _linear(inner, d, bias=False)),
    ]


def _slstm_block(d: int, heads: int, kernel: int) -> list[tuple[str, int]]:
    dh = d // heads
    width = ffn_width(d)
    return [
        ("norm", d),
        ("conv", d * kernel + d),
        ("gates", 4 * heads * dh * dh),
        ("recurrent", heads * dh * 4 * dh),
        ("bias", 4 * d),
        ("groupnorm", d),
        ("ffn_norm", d),
        ("ffn_up", _linear(d, 2 * width, bias=False)),
        ("ffn_down", _linear(width, d, bias=False)),
    ]


def _encoder_block(d: int, ratio: int) -> list[tuple[str, int]]:
    return [
        ("attention", 4 * _linear(d, d)),
        ("norm1", 2 * d),
        ("ffn", _linear(d, ratio * d) + _linear(ratio * d, d)),
        ("norm2", 2 * d),
    ]


def itemize_parameters(spec: ModelSpec) -> list[tuple[str, int]]:
    """Per-layer trainable scalar counts, in forward order."""
    s = spec
    if s.kind is ModelKind.NAIVE:
        return []
    if s.kind is ModelKind.FCN:
        return [("hidden", _linear(s.flat_width + s.n_future * s.n_c, s.hidden_size)),
                ("out", _linear(s.hidden_size, s.n_out))]
    if s.kind is ModelKind.LSTM:
        h = s.hidden_size
        return [("lstm", 4 * (s.n_features * h + h * h + h)),
                ("out", _linear(h + s.n_future * s.n_c, s.n_out))]
    d = s.hidden_size
    if s.kind is ModelKind.XLSTM:
        items = [("embed", _linear(s.n_features, d))]
        for j, kind in enumerate(s.block_pattern):
            block = (_mlstm_block(d, s.num_heads, s.conv_kernel, s.qkv_size) if kind == "m"
                     else _slstm_block(d, s.num_heads, s.conv_kernel))
            items += [(f"block{j}.{name}", n) for name, n in block]
        return items + [("post_norm", 2 * d), ("head", _linear(d * s.n_in, s.n_out))]
    items = [("embed", _linear(s.n_features, d)), ("position", s.n_in * d)]
    for j in range(s.num_blocks):
        items += [(f"block{j}.{name}", n) for name, n in _encoder_block(d, s.ffn_ratio)]
    return items + [("head_hidden", _linear(d, d)), ("head_out", _linear(d, s.n_out))]


def count_parameters(spec: ModelSpec) -> int:
    return sum(n for _, n in itemize_parameters(spec))
