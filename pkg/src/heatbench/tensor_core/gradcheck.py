"""Central finite-difference oracle for checking analytic gradients."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor, backward, no_grad

#: denominators below this are treated as this value, so vanishing gradients
#: are judged on absolute error instead of blowing up the ratio
REL_FLOOR = 1e-5


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = REL_FLOOR) -> np.ndarray:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / denom


def numerical_gradient(fn: Callable[[], Tensor], param: Tensor, eps: float = 1e-5,
                       indices: Sequence[tuple] | None = None) -> np.ndarray:
    """Central differences of scalar ``fn()`` w.r.t. ``param`` (in place perturbation).

    With ``indices`` only those coordinates are probed; the rest stay NaN.
    """
    grad = np.full(param.shape, np.nan)
    flat_iter = indices if indices is not None else list(np.ndindex(param.shape))
    with no_grad():
        for idx in flat_iter:
            orig = param.data[idx]
            param.data[idx] = orig + eps
            up = fn().item()
            param.data[idx] = orig - eps
            down = fn().item()
            param.data[idx] = orig
            grad[idx] = (up - down) / (2 * eps)
    return grad


def gradient_check(fn: Callable[[], Tensor], params: Sequence[Tensor], eps: float = 1e-5,
                   max_coords: int | None = None, n_directions: int = 0,
                   rng: np.random.Generator | None = None) -> float:
    """Largest relative error between backprop and finite differences.

    ``max_coords`` caps the coordinates probed per parameter (random subset);
    ``n_directions`` adds directional-derivative probes along random unit
    vectors spanning all parameters at once, which covers every coordinate
    cheaply.
    """
    rng = rng or np.random.default_rng(0)
    for p in params:
        p.grad = None
    loss = fn()
    backward(loss)
    analytic = [p.grad.copy() if p.grad is not None else np.zeros(p.shape) for p in params]

    worst = 0.0
    for p, a in zip(params, analytic):
        coords = list(np.ndindex(p.shape))
        if max_coords is not None and len(coords) > max_coords:
            pick = rng.choice(len(coords), size=max_coords, replace=False)
            coords = [coords[i] for i in pick]
        num = numerical_gradient(fn, p, eps, coords)
        sel = tuple(np.array(coords).T)
        worst = max(worst, float(relative_error(a[sel], num[sel]).max()))

    for _ in range(n_directions):
        dirs = [rng.standard_normal(p.shape) for p in params]
        norm = np.sqrt(sum(float((d * d).sum()) for d in dirs))
        dirs = [d / norm for d in dirs]
        expected = sum(float((a * d).sum()) for a, d in zip(analytic, dirs))
        saved = [p.data.copy() for p in params]
        with no_grad():
            for p, d, s in zip(params, dirs, saved):
                p.data[...] = s + eps * d
            up = fn().item()
            for p, d, s in zip(params, dirs, saved):
                p.data[...] = s - eps * d
            down = fn().item()
            for p, s in zip(params, saved):
                p.data[...] = s
        numeric = (up - down) / (2 * eps)
        worst = max(worst, float(relative_error(np.array(expected), np.array(numeric))))
    return worst
