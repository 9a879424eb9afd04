"""Hot inner loops: LSTM/sLSTM recurrences and the causal depthwise convolution.

A compiled Cython backend is used when the extension was built; otherwise the
pure-numpy reference runs. Set ``HEATBENCH_KERNELS=python`` to force the
fallback, or call :func:`use_backend` at runtime.
"""

import os

from . import _reference

try:
    if os.environ.get("HEATBENCH_KERNELS", "").lower() == "python":
        raise ImportError("compiled kernels disabled by HEATBENCH_KERNELS")
    from . import _compiled
except ImportError:
    _compiled = None

_BACKENDS = {"python": _reference}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled

_active = _compiled if _compiled is not None else _reference


def available_backends() -> list[str]:
    return list(_BACKENDS)


def backend_name() -> str:
    return _active.NAME


def use_backend(name: str) -> None:
    global _active
    try:
        _active = _BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} not available; have {available_backends()}") from None


def get_backend(name: str):
    return _BACKENDS[name]


def lstm_forward(gx, U):
    return _active.lstm_forward(gx, U)


def lstm_backward(dh, U, cache):
    return _active.lstm_backward(dh, U, cache)


def slstm_forward(gx, R):
    return _active.slstm_forward(gx, R)


def slstm_backward(dh, R, cache):
    return _active.slstm_backward(dh, R, cache)


def conv_forward(x, w):
    return _active.conv_forward(x, w)


def conv_backward(g, x, w):
    return _active.conv_backward(g, x, w)
