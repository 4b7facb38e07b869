# models/modes.py
# Per-step channel activation (2D / 3D / joint) and training-time coordinate noise.
import numpy as np

from core.errors import ContractError
from geometry.geom import Conformer, Modality, with_positions
from models.config import Mode, ModelConfig

MODE_ORDER = (Mode.TWO_D, Mode.THREE_D, Mode.JOINT)


def sample_mode(cfg: ModelConfig, rng: np.random.Generator, override: Mode | None = None) -> Mode:
    """Categorical draw over (2D, 3D, joint); `override` pins the mode for inference."""
    if override is not None:
        return Mode(override)
    u = rng.random()
    cumulative = np.cumsum(cfg.mode_probs)
    for mode, edge in zip(MODE_ORDER, cumulative):
        if u < edge:
            return mode
    # u landed in the rounding slack above the last edge
    return next(m for m, p in zip(reversed(MODE_ORDER), reversed(cfg.mode_probs)) if p > 0)


def add_coordinate_noise(c: Conformer, scale: float, rng: np.random.Generator,
                         modality: Modality | None = None) -> Conformer:
    if scale < 0:
        raise ContractError(f"noise scale must be >= 0, got {scale}")
    if scale == 0:
        return c
    noise = rng.normal(0.0, scale, size=c.positions.shape)
    return with_positions(c, c.positions + noise, modality)
