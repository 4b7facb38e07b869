# models/optim.py
# AdamW-style optimizer and the two learning-rate schedules.
import logging

import numpy as np

from core.errors import NonFiniteError
from models.params import Params

logger = logging.getLogger(__name__)


class AdamW:
    """Adaptive per-parameter steps with decoupled weight decay. Updates `params` in place.

    beta1 = 0 gives the momentum-free variant.
    """

    def __init__(self, params: Params, beta1: float = 0.0, beta2: float = 0.999, eps: float = 1e-8,
                 weight_decay: float = 0.0):
        self.params = params
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.weight_decay = weight_decay
        self.m = {name: np.zeros_like(v) for name, v in params.items()}
        self.v = {name: np.zeros_like(v) for name, v in params.items()}
        self.t = 0

    def step(self, grads: dict[str, np.ndarray], lr: float):
        self.t += 1
        for name, g in grads.items():
            if name not in self.params:
                continue
            if not np.isfinite(g).all():
                raise NonFiniteError(f"gradient of '{name}' holds NaN or Inf at update {self.t}")
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * g * g
            m_hat = self.m[name] / (1.0 - self.beta1 ** self.t)
            v_hat = self.v[name] / (1.0 - self.beta2 ** self.t)
            p = self.params[name]
            if self.weight_decay:
                p *= 1.0 - lr * self.weight_decay
            p -= lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def snapshot(self) -> dict:
        """Copies of the parameters and moment estimates, for `restore`."""
        return {
            "params": {name: v.copy() for name, v in self.params.items()},
            "m": {name: v.copy() for name, v in self.m.items()},
            "v": {name: v.copy() for name, v in self.v.items()},
            "t": self.t,
        }

    def restore(self, state: dict):
        # in place: callers hold references to the parameter arrays
        for name, v in state["params"].items():
            np.copyto(self.params[name], v)
        self.m = {name: v.copy() for name, v in state["m"].items()}
        self.v = {name: v.copy() for name, v in state["v"].items()}
        self.t = state["t"]


def warmup_factor(step: int, warmup_steps: int) -> float:
    if warmup_steps <= 0:
        return 1.0
    return min(1.0, (step + 1) / warmup_steps)


def warmup_constant_lr(step: int, base_lr: float, warmup_steps: int) -> float:
    """Linear warmup to `base_lr`, then constant."""
    return base_lr * warmup_factor(step, warmup_steps)


class ReduceOnPlateau:
    """Multiply the rate by `factor` after `patience` epochs without a new best, floored at `min_lr`."""

    def __init__(self, lr: float, factor: float = 0.8, min_lr: float = 1e-7, patience: int = 15):
        self.lr = lr
        self.factor = factor
        self.min_lr = min_lr
        self.patience = patience
        self.best = float("inf")
        self.bad_epochs = 0

    def step(self, metric: float) -> float:
        if metric < self.best:
            self.best = metric
            self.bad_epochs = 0
            return self.lr
        self.bad_epochs += 1
        if self.bad_epochs >= self.patience:
            new_lr = max(self.lr * self.factor, self.min_lr)
            if new_lr < self.lr:
                logger.info("Plateau for %d epochs: lr %.3e -> %.3e", self.bad_epochs, self.lr, new_lr)
            self.lr = new_lr
            self.bad_epochs = 0
        return self.lr

    def reduce(self, factor: float) -> float:
        """Immediate cut, floored at `min_lr`; the patience counter restarts."""
        self.lr = max(self.lr * factor, self.min_lr)
        self.bad_epochs = 0
        return self.lr
