"""Checkpoint container: a zip archive with ``manifest.json`` and one ``params/<name>.npy`` per tensor.

Arrays are stored as little-endian float64. The manifest holds the model
spec, parameter names and shapes in order, and free-form provenance.
"""

from __future__ import annotations

import io
import json
import os
import zipfile

import numpy as np

from .spec import ModelSpec

FORMAT = "heatbench-checkpoint"
VERSION = 1


def save_checkpoint(path: str | os.PathLike, spec: ModelSpec, state: dict[str, np.ndarray],
                    meta: dict | None = None) -> None:
    manifest = {
        "format": FORMAT,
        "version": VERSION,
        "spec": spec.to_dict(),
        "parameters": [{"name": k, "shape": list(v.shape)} for k, v in state.items()],
        "meta": meta or {},
    }
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        zf.writestr("manifest.json", json.dumps(manifest, indent=2, sort_keys=True))
        for name, arr in state.items():
            buf = io.BytesIO()
            np.save(buf, np.ascontiguousarray(arr, dtype="<f8"), allow_pickle=False)
            zf.writestr(f"params/{name}.npy", buf.getvalue())


def load_checkpoint(path: str | os.PathLike) -> tuple[ModelSpec, dict[str, np.ndarray], dict]:
    """Return ``(spec, state, meta)``; raises ValueError on a malformed archive."""
    try:
        with zipfile.ZipFile(path) as zf:
            manifest = json.loads(zf.read("manifest.json"))
            if manifest.get("format") != FORMAT:
                raise ValueError(f"{path}: not a {FORMAT} archive")
            state = {}
            for entry in manifest["parameters"]:
                arr = np.load(io.BytesIO(zf.read(f"params/{entry['name']}.npy")), allow_pickle=False)
                if list(arr.shape) != entry["shape"]:
                    raise ValueError(f"{path}: {entry['name']} has shape {arr.shape}, manifest says {entry['shape']}")
                state[entry["name"]] = arr.astype(np.float64)
    except (KeyError, zipfile.BadZipFile) as exc:
        raise ValueError(f"{path}: malformed checkpoint ({exc})") from None
    return ModelSpec.from_dict(manifest["spec"]), state, manifest.get("meta", {})
