# models/train.py
# Toy gap-regression loop for Transformer-M-ViSNet: L1 loss, warmup then
# constant learning rate, per-molecule mode sampling and coordinate noise.
import functools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from core.errors import ContractError, DivergenceError, NonFiniteError
from geometry.geom import Conformer
from models.config import Mode, ModelConfig, TrainConfig
from models.modes import add_coordinate_noise, sample_mode
from models.optim import AdamW, warmup_constant_lr
from models.params import Params
from models.transformer_m import init_params, predict_gap
from molecules.graph2d import MolGraph
from numcore import ops
from numcore.tensor import Tape, backward

logger = logging.getLogger(__name__)

Sample = tuple[MolGraph, Conformer, float]


@dataclass
class TrainResult:
    params: Params
    loss_curve: list[float] = field(default_factory=list)
    baseline_l1: float = 0.0
    initial_l1: float = 0.0
    final_l1: float = 0.0


def constant_baseline_l1(targets) -> float:
    """L1 of the best constant predictor (the median)."""
    targets = np.asarray(targets, dtype=np.float64)
    return float(np.mean(np.abs(targets - np.median(targets))))


def evaluate_l1(dataset: Sequence[Sample], params: Params, cfg: ModelConfig, mode: Mode, threads: int = 1) -> float:
    """Mean absolute error over the dataset at inference (no noise, no dropout)."""
    def one(sample):
        g, c, target = sample
        return abs(predict_gap(g, c if mode.uses_3d else None, params, cfg, mode).item() - target)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            errors = list(pool.map(one, dataset))
    else:
        errors = [one(s) for s in dataset]
    return float(np.mean(errors))


def target_stats(targets, standardize: bool = True) -> tuple[float, float]:
    """(mean, scale) of the training targets; scale is 1 when not standardizing or all targets are equal."""
    targets = np.asarray(targets, dtype=np.float64)
    scale = float(targets.std()) if standardize else 1.0
    return float(targets.mean()), scale if scale > 0 else 1.0


def to_target_units(params: Params, mean: float, scale: float) -> Params:
    """Fold the standardization into the decoder output layer: y = scale * y_std + mean."""
    out = dict(params)
    out["decoder.w2"] = params["decoder.w2"] * scale
    out["decoder.b2"] = params["decoder.b2"] * scale + mean
    return out


def train_toy(dataset: Sequence[Sample], model_cfg: ModelConfig, train_cfg: TrainConfig,
              threads: int = 1) -> TrainResult:
    """Train on standardized targets; the returned parameters predict in target units."""
    if not dataset:
        raise ContractError("training needs at least one sample")
    targets = np.array([t for _, _, t in dataset], dtype=np.float64)
    mean, scale = target_stats(targets, train_cfg.standardize_targets)
    params = init_params(model_cfg)
    result = TrainResult(params, baseline_l1=constant_baseline_l1(targets))
    result.initial_l1 = evaluate_l1(dataset, to_target_units(params, mean, scale), model_cfg, train_cfg.eval_mode,
                                    threads)
    logger.info("Baseline L1 %.4f, initial L1 %.4f, target mean %.4f scale %.4f",
                result.baseline_l1, result.initial_l1, mean, scale)

    opt = AdamW(params, train_cfg.beta1, train_cfg.beta2, weight_decay=train_cfg.weight_decay)
    rng = np.random.default_rng(train_cfg.seed)
    batch_size = min(train_cfg.batch_size, len(dataset))
    for step in range(train_cfg.steps):
        batch = rng.choice(len(dataset), size=batch_size, replace=False)
        tape = Tape()
        p = tape.watch(params)
        try:
            losses = []
            for idx in batch:
                g, c, target = dataset[idx]
                mode = sample_mode(model_cfg, rng)
                noisy = add_coordinate_noise(c, model_cfg.noise_scale, rng) if mode.uses_3d else None
                pred = predict_gap(g, noisy, p, model_cfg, mode, rng=rng)
                losses.append(ops.abs_(pred - (target - mean) / scale))
            loss = functools.reduce(ops.add, losses) * (1.0 / batch_size)
            grads = backward(tape, loss)
            opt.step(grads, warmup_constant_lr(step, train_cfg.lr, train_cfg.warmup_steps))
        except NonFiniteError as e:
            raise DivergenceError(f"training diverged at step {step}: {e.detail}")
        # curve in target units
        result.loss_curve.append(loss.item() * scale)
        if (step + 1) % train_cfg.log_every == 0:
            logger.info("step %d/%d loss %.5f", step + 1, train_cfg.steps, result.loss_curve[-1])

    result.params = params = to_target_units(params, mean, scale)
    result.final_l1 = evaluate_l1(dataset, params, model_cfg, train_cfg.eval_mode, threads)
    logger.info("Final L1 %.4f (%.1f%% of baseline)", result.final_l1, 100 * result.final_l1 / max(result.baseline_l1, 1e-12))
    return result
