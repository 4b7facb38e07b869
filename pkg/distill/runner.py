# distill/runner.py
# Student-on-generated / teacher-on-optimized embedding alignment with a
# frozen, hash-checked teacher and warmup + reduce-on-plateau scheduling.
import functools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from core.errors import ContractError, DivergenceError, IntegrityError, NonFiniteError
from distill.corpus import DistillPair, check_pairs
from distill.losses import infonce_loss, l1_embed_loss, mean_cosine
from geometry.geom import Conformer
from models.config import DistillConfig, LossKind, VisNetConfig
from models.optim import AdamW, ReduceOnPlateau, warmup_factor
from models.params import Params, param_hash
from models.visnet import init_visnet, student_from_teacher, visnet_embed, visnet_predict
from numcore import ops
from numcore.tensor import Tape, Tensor, backward

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss: float
    mean_cosine: float
    lr: float


@dataclass
class DistillResult:
    student_params: Params
    teacher_hash: str
    trace: list[EpochRecord] = field(default_factory=list)


def teacher_embed(c_optimized: Conformer, teacher_params: Params, cfg: VisNetConfig) -> Tensor:
    """Graph embedding of the frozen teacher. Atom types and coordinates only."""
    return visnet_embed(c_optimized, teacher_params, cfg)


def teacher_embeddings(pairs: list[DistillPair], teacher_params: Params, cfg: VisNetConfig,
                       threads: int = 1) -> np.ndarray:
    def one(pair):
        return teacher_embed(pair.optimized, teacher_params, cfg).data

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, pairs))
    else:
        rows = [one(p) for p in pairs]
    return np.stack(rows)


def _batch_loss(pairs: list[DistillPair], idx: np.ndarray, student: dict, teacher_emb: np.ndarray,
                cfg: DistillConfig) -> tuple[Tensor, np.ndarray]:
    rows = [ops.reshape(visnet_embed(pairs[i].generated, student, cfg.student, graph=pairs[i].graph), (1, -1))
            for i in idx]
    student_emb = ops.concat(rows, axis=0)
    target = teacher_emb[idx]
    if cfg.loss_kind is LossKind.INFONCE:
        loss = infonce_loss(student_emb, target, cfg.temperature)
    else:
        loss = l1_embed_loss(student_emb, target)
    if cfg.gap_weight > 0:
        gaps = [ops.abs_(visnet_predict(rows[k], student) - pairs[i].graph.gap_ev) for k, i in enumerate(idx)]
        loss = loss + functools.reduce(ops.add, gaps) * (cfg.gap_weight / len(idx))
    return loss, student_emb.data


def _batches(n: int, batch_size: int, order: np.ndarray) -> list[np.ndarray]:
    # every batch holds at least batch_size pairs (when n allows), so InfoNCE never sees B < 2
    return np.array_split(order, max(1, n // batch_size))


def evaluate(pairs: list[DistillPair], student: Params, teacher_emb: np.ndarray, cfg: DistillConfig) -> tuple[float, float]:
    """(mean batch loss, mean cosine) over the whole corpus in a fixed order."""
    losses, embs = [], []
    for idx in _batches(len(pairs), cfg.batch_size, np.arange(len(pairs))):
        loss, emb = _batch_loss(pairs, idx, student, teacher_emb, cfg)
        losses.append(loss.item())
        embs.append(emb)
    return float(np.mean(losses)), mean_cosine(np.vstack(embs), teacher_emb)


def distill_run(pairs: list[DistillPair], cfg: DistillConfig, teacher_params: Params,
                student_params: Params | None = None, threads: int = 1,
                on_epoch: Callable[[EpochRecord], None] | None = None) -> DistillResult:
    """Train the student and return it with a per-epoch trace; epoch 0 is the untrained student."""
    check_pairs(pairs)
    if cfg.loss_kind is LossKind.INFONCE and len(pairs) < 2:
        raise ContractError("InfoNCE needs at least 2 pairs")
    if cfg.gap_weight > 0 and any(p.graph.gap_ev is None for p in pairs):
        raise ContractError("gap_weight > 0 needs a gap_ev target on every molecule")

    teacher_hash = param_hash(teacher_params)
    if student_params is None:
        if cfg.init_student_from_teacher:
            student_params = student_from_teacher(teacher_params, cfg.student)
        else:
            student_params = init_visnet(cfg.student, seed=cfg.seed + 1)
    teacher_emb = teacher_embeddings(pairs, teacher_params, cfg.teacher, threads)

    def verify_teacher():
        if param_hash(teacher_params) != teacher_hash:
            raise IntegrityError("teacher parameters changed during distillation")

    plateau = ReduceOnPlateau(cfg.lr, cfg.lr_factor, cfg.lr_min, cfg.lr_patience)
    result = DistillResult(student_params, teacher_hash)
    loss0, cos0 = evaluate(pairs, student_params, teacher_emb, cfg)
    result.trace.append(EpochRecord(0, loss0, cos0, plateau.lr * warmup_factor(0, cfg.warmup_steps)))
    logger.info("epoch 0 loss %.6f cosine %.6f", loss0, cos0)

    opt = AdamW(student_params, cfg.beta1, cfg.beta2, weight_decay=cfg.weight_decay)
    rng = np.random.default_rng(cfg.seed)
    step, best_cosine = 0, cos0

    def train_epoch(epoch: int, start_step: int) -> tuple[int, float]:
        s, lr = start_step, plateau.lr
        for idx in _batches(len(pairs), cfg.batch_size, rng.permutation(len(pairs))):
            tape = Tape()
            try:
                loss, _ = _batch_loss(pairs, idx, tape.watch(student_params), teacher_emb, cfg)
                lr = plateau.lr * warmup_factor(s, cfg.warmup_steps)
                opt.step(backward(tape, loss), lr)
            except NonFiniteError as e:
                raise DivergenceError(f"distillation diverged in epoch {epoch}: {e.detail}")
            s += 1
        return s, lr

    for epoch in range(1, cfg.total_epochs + 1):
        saved = opt.snapshot()
        for attempt in range(cfg.max_rollbacks + 1):
            end_step, lr = train_epoch(epoch, step)
            # the plateau metric is the full-corpus loss in a fixed order, not the shuffled batch mean
            epoch_loss, cosine = evaluate(pairs, student_params, teacher_emb, cfg)
            if cosine > best_cosine or cfg.max_rollbacks == 0:
                break
            if attempt == cfg.max_rollbacks:
                logger.warning("epoch %d: cosine %.6f after %d rollbacks, keeping the previous state",
                               epoch, cosine, cfg.max_rollbacks)
                opt.restore(saved)
                epoch_loss, cosine = evaluate(pairs, student_params, teacher_emb, cfg)
                break
            opt.restore(saved)
            new_lr = plateau.reduce(cfg.rollback_factor)
            logger.info("epoch %d: cosine %.6f did not beat %.6f, rolled back, lr -> %.3e",
                        epoch, cosine, best_cosine, new_lr)
        step = end_step
        best_cosine = max(best_cosine, cosine)
        if step >= cfg.warmup_steps:
            plateau.step(epoch_loss)
        record = EpochRecord(epoch, epoch_loss, cosine, lr)
        result.trace.append(record)
        logger.info("epoch %d loss %.6f cosine %.6f lr %.3e", epoch, epoch_loss, cosine, lr)
        if on_epoch is not None:
            on_epoch(record)
        verify_teacher()

    verify_teacher()
    return result
