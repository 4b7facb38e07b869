# storage/checkpoints.py
# Parameter maps as versioned JSON. Floats are written with repr, which reads
# back to the same bits.
import logging
from pathlib import Path

import numpy as np

from core.errors import InputFileError, SchemaError
from models.params import Params
from storage.files import load_json, save_json

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "rgc-attn/checkpoint"
CHECKPOINT_VERSION = 1


def save_checkpoint(path: str | Path, params: Params, config: dict | None = None, kind: str = "model"):
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "kind": kind,
        "config": config or {},
        "params": {
            name: {"shape": list(arr.shape), "data": [float(v) for v in np.asarray(arr, dtype=np.float64).ravel()]}
            for name, arr in params.items()
        },
    }
    save_json(path, payload, indent=None)
    logger.info("Saved %s checkpoint with %d tensors to %s", kind, len(params), path)


def load_checkpoint(path: str | Path) -> tuple[Params, dict, str]:
    """(params, embedded config, kind)."""
    payload = load_json(path)
    if not isinstance(payload, dict) or payload.get("format") != CHECKPOINT_FORMAT:
        raise InputFileError(path, "not a checkpoint file")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise InputFileError(path, f"unsupported checkpoint version {payload.get('version')}")
    params = {}
    for name, entry in payload["params"].items():
        shape = tuple(entry["shape"])
        data = np.array(entry["data"], dtype=np.float64)
        if data.size != int(np.prod(shape, dtype=np.int64)):
            raise SchemaError(f"params.{name}", f"{data.size} values for shape {shape}")
        params[name] = data.reshape(shape)
    return params, payload.get("config", {}), payload.get("kind", "model")
