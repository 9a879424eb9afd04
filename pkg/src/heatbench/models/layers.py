"""Parameter containers and the reusable layers the forecasters are built from."""

from __future__ import annotations

from typing import Callable, Iterator

import numpy as np

from ..tensor_core import Tensor, ops

#: init tags understood by Module.reset_parameters
GLOROT, ZEROS, ONES, FAN_IN = "glorot", "zeros", "ones", "fan_in"


class Module:
    """Holds trainable tensors and child modules in attribute order."""

    def __init__(self):
        object.__setattr__(self, "_params", {})
        object.__setattr__(self, "_inits", {})
        object.__setattr__(self, "_children", {})

    def __setattr__(self, name, value):
        if isinstance(value, Module):
            self._children[name] = value
        object.__setattr__(self, name, value)

    def param(self, name: str, shape, init="glorot") -> Tensor:
        """Register a trainable tensor; ``init`` is a tag or a fixed array."""
        t = Tensor(np.zeros(shape), requires_grad=True)
        self._params[name] = t
        self._inits[name] = init
        object.__setattr__(self, name, t)
        return t

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for name, t in self._params.items():
            yield prefix + name, t
        for cname, child in self._children.items():
            yield from child.named_parameters(f"{prefix}{cname}.")

    def parameters(self) -> list[Tensor]:
        return [t for _, t in self.named_parameters()]

    def named_inits(self, prefix: str = "") -> Iterator[tuple[str, object]]:
        yield from ((prefix + k, v) for k, v in self._inits.items())
        for cname, child in self._children.items():
            yield from child.named_inits(f"{prefix}{cname}.")

    def reset_parameters(self, rng: np.random.Generator,
                         glorot: Callable[[tuple, np.random.Generator], np.ndarray]) -> None:
        """Fill every tensor according to its init tag, in registration order."""
        inits = dict(self.named_inits())
        for name, t in self.named_parameters():
            tag = inits[name]
            if isinstance(tag, np.ndarray):
                t.data[...] = tag
            elif tag == GLOROT:
                t.data[...] = glorot(t.shape, rng)
            elif tag == ZEROS:
                t.data[...] = 0.0
            elif tag == ONES:
                t.data[...] = 1.0
            elif tag == FAN_IN:
                bound = 1.0 / np.sqrt(t.shape[-1])
                t.data[...] = rng.uniform(-bound, bound, t.shape)
            else:
                raise ValueError(f"unknown init {tag!r} for {name}")

    def zero_grad(self) -> None:
        for t in self.parameters():
            t.grad = None

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        own = dict(self.named_parameters())
        if set(own) != set(state):
            missing, extra = sorted(set(own) - set(state)), sorted(set(state) - set(own))
            raise KeyError(f"parameter names differ; missing {missing}, unexpected {extra}")
        for name, t in own.items():
            if state[name].shape != t.shape:
                raise ValueError(f"{name}: shape {state[name].shape} != {t.shape}")
            t.data[...] = state[name]

    def num_parameters(self) -> int:
        return sum(t.size for t in self.parameters())


class Linear(Module):
    def __init__(self, n_in: int, n_out: int, bias: bool = True):
        super().__init__()
        self.param("weight", (n_in, n_out), GLOROT)
        self.bias = self.param("bias", (n_out,), ZEROS) if bias else None

    def __call__(self, x):
        y = ops.matmul(x, self.weight)
        return ops.add(y, self.bias) if self.bias is not None else y


class LayerNorm(Module):
    def __init__(self, size: int, bias: bool = True):
        super().__init__()
        self.size = size
        self.param("weight", (size,), ONES)
        self.bias = self.param("bias", (size,), ZEROS) if bias else None

    def __call__(self, x):
        return ops.layer_norm(x, self.weight, self.bias, size=self.size)


class HeadwiseLinear(Module):
    """Block-diagonal projection: the feature axis is cut into equal blocks, each with its own square matrix."""

    def __init__(self, dim: int, num_blocks: int, bias: bool = False):
        super().__init__()
        if dim % num_blocks:
            raise ValueError(f"dim {dim} not divisible into {num_blocks} blocks")
        self.dim, self.num_blocks, self.block = dim, num_blocks, dim // num_blocks
        self.param("weight", (num_blocks, self.block, self.block), GLOROT)
        self.bias = self.param("bias", (dim,), ZEROS) if bias else None

    def __call__(self, x):
        lead = x.shape[:-1]
        rows = int(np.prod(lead))
        xb = ops.transpose(ops.reshape(x, (rows, self.num_blocks, self.block)), (1, 0, 2))
        y = ops.matmul(xb, self.weight)  # (blocks, rows, block)
        y = ops.reshape(ops.transpose(y, (1, 0, 2)), (*lead, self.dim))
        return ops.add(y, self.bias) if self.bias is not None else y


class CausalConv1d(Module):
    def __init__(self, channels: int, kernel_size: int):
        super().__init__()
        if kernel_size < 1:
            raise ValueError("kernel_size must be >= 1")
        self.param("weight", (channels, kernel_size), FAN_IN)
        self.param("bias", (channels,), ZEROS)

    def __call__(self, x):
        return ops.conv1d_causal(x, self.weight, self.bias)


class MultiHeadNorm(Module):
    """Per-head normalisation of ``(batch, seq, heads * head_dim)`` followed by a shared scale."""

    def __init__(self, heads: int, head_dim: int):
        super().__init__()
        self.heads, self.head_dim = heads, head_dim
        self.param("weight", (heads * head_dim,), ONES)

    def __call__(self, x):
        lead = x.shape[:-1]
        xh = ops.reshape(x, (*lead, self.heads, self.head_dim))
        normed = ops.reshape(ops.layer_norm(xh), (*lead, self.heads * self.head_dim))
        return ops.mul(normed, self.weight)
