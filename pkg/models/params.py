# models/params.py
# Parameter maps are plain dicts of float64 arrays keyed by dotted names.
import copy
import hashlib

import numpy as np

Params = dict[str, np.ndarray]

EMBEDDING_STD = 0.02


class ParamInit:
    """Seeded initializer that fills a parameter map in insertion order."""

    def __init__(self, seed: int):
        self.rng = np.random.default_rng(seed)
        self.params: Params = {}

    def embedding(self, name: str, rows: int, dim: int, std: float = EMBEDDING_STD):
        self.params[name] = self.rng.normal(0.0, std, size=(rows, dim))

    def matrix(self, name: str, fan_in: int, fan_out: int):
        self.params[name] = self.rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_in, fan_out))

    def vector(self, name: str, dim: int, std: float = EMBEDDING_STD):
        self.params[name] = self.rng.normal(0.0, std, size=dim)

    def zeros(self, name: str, *shape: int):
        self.params[name] = np.zeros(shape)

    def ones(self, name: str, *shape: int):
        self.params[name] = np.ones(shape)

    def mlp(self, prefix: str, d_in: int, d_hidden: int, d_out: int, zero_out: bool = False):
        self.matrix(f"{prefix}.w1", d_in, d_hidden)
        self.zeros(f"{prefix}.b1", d_hidden)
        if zero_out:
            self.zeros(f"{prefix}.w2", d_hidden, d_out)
        else:
            self.matrix(f"{prefix}.w2", d_hidden, d_out)
        self.zeros(f"{prefix}.b2", d_out)

    def layer_norm(self, prefix: str, dim: int):
        self.ones(f"{prefix}.gamma", dim)
        self.zeros(f"{prefix}.beta", dim)


def param_hash(params: Params) -> str:
    """sha256 over names, shapes and raw bytes, in sorted name order."""
    h = hashlib.sha256()
    for name in sorted(params):
        arr = np.ascontiguousarray(params[name], dtype=np.float64)
        h.update(name.encode())
        h.update(str(arr.shape).encode())
        h.update(arr.tobytes())
    return h.hexdigest()


def copy_params(params: Params) -> Params:
    return copy.deepcopy(params)
