"""Minimal float64 tensors with reverse-mode automatic differentiation."""

from .tensor import (GraphError, NonFiniteError, ShapeError, Tape, Tensor, as_tensor, backward,
                     grad_enabled, no_grad)
from .ops import (abs_, add, broadcast_to, concat, conv1d_causal, div, dropout, elementwise, exp,
                  gelu, getitem, layer_norm, log, logsigmoid, lstm_sequence, masked_fill, matmul,
                  max_, maximum, mean, min_, mul, neg, power, reduce, relu, reshape, sigmoid, silu,
                  slstm_sequence, softmax, sqrt, stack, sub, sum_, swapaxes, tanh, transpose)
from .gradcheck import gradient_check, numerical_gradient, relative_error

__all__ = [name for name in dir() if not name.startswith("_")]
