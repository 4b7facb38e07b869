# numcore/nn.py
# Small building blocks shared by the encoders: linear maps, MLPs, layer norm,
# dropout, stochastic depth and the Gaussian distance basis.
import numpy as np

from numcore import ops
from numcore.tensor import Tensor


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """x @ w (+ b) over the last axis, for inputs of any rank."""
    if x.ndim == 2:
        out = ops.matmul(x, w)
    else:
        lead = x.shape[:-1]
        out = ops.reshape(ops.matmul(ops.reshape(x, (-1, x.shape[-1])), w), (*lead, w.shape[-1]))
    return out if b is None else out + b


def mlp(x: Tensor, params: dict[str, Tensor], prefix: str) -> Tensor:
    """One hidden layer with SiLU: silu(x W1 + b1) W2 + b2."""
    hidden = ops.silu(linear(x, params[f"{prefix}.w1"], params[f"{prefix}.b1"]))
    return linear(hidden, params[f"{prefix}.w2"], params[f"{prefix}.b2"])


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    centered = x - ops.mean(x, axis=-1, keepdims=True)
    var = ops.mean(centered * centered, axis=-1, keepdims=True)
    return centered * ops.pow_(var + eps, -0.5) * gamma + beta


def dropout(x: Tensor, rate: float, rng: np.random.Generator | None) -> Tensor:
    # inverted dropout; rng=None means inference
    if rng is None or rate <= 0.0:
        return x
    keep = rng.random(x.shape) >= rate
    return x * (keep / (1.0 - rate))


def drop_path(x: Tensor, rate: float, rng: np.random.Generator | None) -> Tensor:
    """Stochastic depth for one residual branch of one molecule."""
    if rng is None or rate <= 0.0:
        return x
    if rng.random() < rate:
        return x * 0.0
    return x * (1.0 / (1.0 - rate))


def gaussian_rbf(d: Tensor, n_rbf: int, cutoff: float) -> Tensor:
    """exp(-0.5 ((d - mu_k) / width)^2) for n_rbf centers evenly spaced on [0, cutoff]."""
    centers = np.linspace(0.0, cutoff, n_rbf)
    width = centers[1] - centers[0] if n_rbf > 1 else cutoff
    diff = (ops.reshape(d, (*d.shape, 1)) - centers) * (1.0 / width)
    return ops.exp(diff * diff * -0.5)


def l2_normalize(x: Tensor, eps: float = 1e-12) -> Tensor:
    return x * ops.pow_(ops.sum_(x * x, axis=-1, keepdims=True) + eps, -0.5)
