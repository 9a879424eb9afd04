"""Weight initialisation."""

from __future__ import annotations

import numpy as np


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def glorot_init(shape, seed) -> np.ndarray:
    """Uniform on ``±sqrt(6 / (fan_in + fan_out))``.

    Fans are the last two axes; leading axes (heads, blocks) index
    independent matrices. A 1-D shape uses its length for both fans.

    Args:
        shape: Weight shape.
        seed: Integer seed, SeedSequence, or an existing Generator (advanced in place).
    """
    shape = tuple(shape)
    if not shape:
        raise ValueError("glorot_init needs at least one dimension")
    fan_in, fan_out = (shape[-2], shape[-1]) if len(shape) >= 2 else (shape[0], shape[0])
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return _rng(seed).uniform(-bound, bound, shape)


def initialize(model, seed) -> None:
    """Reset every parameter of ``model`` from one seed, in registration order."""
    model.reset_parameters(_rng(seed), glorot_init)
