"""Versioned JSON checkpoints with bit-exact float64 arrays."""

from __future__ import annotations

import base64
import json
from pathlib import Path

import numpy as np

from .. import diffcore as dc
from .config import IcanConfig
from .network import IcanModel

FORMAT = "icanrank-checkpoint"
VERSION = 1


class CheckpointError(ValueError):
    pass


def _encode(a: np.ndarray) -> dict:
    a = np.ascontiguousarray(a, dtype="<f8")
    return {"shape": list(a.shape), "dtype": "<f8", "data": base64.b64encode(a.tobytes()).decode("ascii")}


def _decode(d: dict) -> np.ndarray:
    if d.get("dtype") != "<f8":
        raise CheckpointError(f"unsupported array dtype {d.get('dtype')!r}")
    raw = base64.b64decode(d["data"])
    return np.frombuffer(raw, dtype="<f8").reshape(d["shape"]).astype(np.float64)


def to_dict(model: IcanModel) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "config": model.config.to_dict(),
        "seed": model.config.seed,
        "mb_columns": None if model.mb_columns is None else [int(c) for c in model.mb_columns],
        "mb_fallback": bool(model.mb_fallback),
        "threshold_used": model.threshold_used,
        "params": {k: _encode(v.value) for k, v in model.params.items()},
        "history": model.history,
    }


def from_dict(d: dict) -> IcanModel:
    if d.get("format") != FORMAT:
        raise CheckpointError("not an icanrank checkpoint")
    if d.get("version") != VERSION:
        raise CheckpointError(f"checkpoint version {d.get('version')} is not supported (expected {VERSION})")
    cfg = IcanConfig.from_dict(d["config"])
    params = {k: dc.parameter(_decode(v), k) for k, v in d["params"].items()}
    mb = d.get("mb_columns")
    return IcanModel(cfg, params, None if mb is None else tuple(mb), d.get("mb_fallback", True),
                     d.get("threshold_used"), list(d.get("history", [])))


def save_model(model: IcanModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(to_dict(model), indent=1, sort_keys=True))


def load_model(path: str | Path) -> IcanModel:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise CheckpointError(f"{path}: not valid JSON ({e})") from e
    return from_dict(d)
