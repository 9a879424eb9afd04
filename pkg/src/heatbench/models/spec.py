"""Architecture descriptions shared by model construction, counting and checkpoints."""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field, replace


class ModelKind(str, enum.Enum):
    NAIVE = "naive"
    FCN = "fcn"
    LSTM = "lstm"
    XLSTM = "xlstm"
    TE = "te"


@dataclass(frozen=True)
class ModelSpec:
    """Hyperparameters of one forecaster.

    Attributes:
        kind: Which architecture.
        n_in: Look-back length.
        n_out: Forecast horizon.
        n_c: Covariate series per timestep.
        n_s: Static building features.
        n_future: Known-future covariate steps (FCN and LSTM only).
        hidden_size: Hidden units (FCN, LSTM) or embedding width (xLSTM, TE).
        num_heads: Attention or memory heads (xLSTM, TE).
        num_blocks: Encoder blocks (TE) or xLSTM blocks.
        dropout: Rate in [0, 1).
        conv_kernel: Causal convolution width inside xLSTM blocks.
        qkv_size: Block size of the headwise query/key/value projections in mLSTM.
        block_pattern: xLSTM block types in order, ``m`` for mLSTM and ``s`` for sLSTM.
        ffn_ratio: TE feed-forward width as a multiple of ``hidden_size``.
    """

    kind: ModelKind
    n_in: int
    n_out: int
    n_c: int = 0
    n_s: int = 0
    n_future: int = 0
    hidden_size: int = 32
    num_heads: int = 4
    num_blocks: int = 2
    dropout: float = 0.0
    conv_kernel: int = 4
    qkv_size: int = 4
    block_pattern: str = ""
    ffn_ratio: int = 4

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if self.kind is ModelKind.XLSTM and not self.block_pattern:
            object.__setattr__(self, "block_pattern", "ms" * (self.num_blocks // 2) + "m" * (self.num_blocks % 2))
        for name in ("n_in", "n_out", "hidden_size", "num_heads", "num_blocks", "conv_kernel", "qkv_size",
                     "ffn_ratio"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("n_c", "n_s", "n_future"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.n_future > self.n_in:
            raise ValueError("n_future must not exceed n_in")
        if self.n_future and self.kind not in (ModelKind.FCN, ModelKind.LSTM):
            raise ValueError(f"{self.kind.value} does not take future covariates")
        if self.n_future and self.n_c == 0:
            raise ValueError("future covariates need n_c > 0")
        if self.kind in (ModelKind.XLSTM, ModelKind.TE) and self.hidden_size % self.num_heads:
            raise ValueError(f"hidden_size {self.hidden_size} not divisible by num_heads {self.num_heads}")
        if self.kind is ModelKind.XLSTM:
            if set(self.block_pattern) - {"m", "s"}:
                raise ValueError(f"block_pattern may only contain 'm' and 's', got {self.block_pattern!r}")
            if len(self.block_pattern) != self.num_blocks:
                raise ValueError("block_pattern length must equal num_blocks")
            inner = 2 * self.hidden_size
            if inner % self.qkv_size or inner % self.num_heads:
                raise ValueError("2 * hidden_size must be divisible by qkv_size and num_heads")

    @property
    def n_features(self) -> int:
        """Per-timestep width of the sequential layout."""
        return 1 + self.n_c + self.n_s

    @property
    def flat_width(self) -> int:
        return (1 + self.n_c) * self.n_in + self.n_s

    @property
    def layout(self) -> str:
        return "flat" if self.kind is ModelKind.FCN else "sequential"

    def with_(self, **changes) -> "ModelSpec":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(**d)


#: look-back, hidden width, dropout, heads and future steps of the best reported configurations
#: per horizon; feature width follows from the chosen feature configuration
_REFERENCE_SIZES = {
    (ModelKind.FCN, 3): dict(n_in=72, hidden_size=51, dropout=0.05),
    (ModelKind.FCN, 24): dict(n_in=38, hidden_size=131, dropout=0.19),
    (ModelKind.LSTM, 3): dict(n_in=59, hidden_size=121, dropout=0.1),
    (ModelKind.LSTM, 24): dict(n_in=38, hidden_size=131, dropout=0.1, n_future=24),
    (ModelKind.XLSTM, 3): dict(n_in=72, hidden_size=256, num_heads=4, num_blocks=4, dropout=0.1),
    (ModelKind.XLSTM, 24): dict(n_in=72, hidden_size=256, num_heads=4, num_blocks=4, dropout=0.1),
    (ModelKind.TE, 3): dict(n_in=72, hidden_size=256, num_heads=8, num_blocks=4, dropout=0.17),
    (ModelKind.TE, 24): dict(n_in=72, hidden_size=256, num_heads=4, num_blocks=4, dropout=0.1),
    (ModelKind.NAIVE, 3): dict(n_in=72),
    (ModelKind.NAIVE, 24): dict(n_in=72),
}


def reference_spec(kind, horizon: int, n_c: int = 0, n_s: int = 0) -> ModelSpec:
    """Full-size configuration for ``kind`` at horizon 3 or 24.

    Future covariates are dropped when ``n_c`` is zero.
    """
    kind = ModelKind(kind)
    params = dict(_REFERENCE_SIZES[(kind, horizon)])
    if n_c == 0:
        params.pop("n_future", None)
    return ModelSpec(kind=kind, n_out=horizon, n_c=n_c, n_s=n_s, **params)


#: small widths that train in seconds per epoch on one CPU core
DESK_DEFAULTS = {
    ModelKind.NAIVE: dict(),
    ModelKind.FCN: dict(hidden_size=64, dropout=0.05),
    ModelKind.LSTM: dict(hidden_size=32, dropout=0.1),
    ModelKind.XLSTM: dict(hidden_size=32, num_heads=4, num_blocks=2, dropout=0.1),
    ModelKind.TE: dict(hidden_size=32, num_heads=4, num_blocks=2, dropout=0.1),
}


def desk_spec(kind, n_in: int, n_out: int, n_c: int = 0, n_s: int = 0, **overrides) -> ModelSpec:
    kind = ModelKind(kind)
    params = dict(DESK_DEFAULTS[kind])
    params.update(overrides)
    return ModelSpec(kind=kind, n_in=n_in, n_out=n_out, n_c=n_c, n_s=n_s, **params)
