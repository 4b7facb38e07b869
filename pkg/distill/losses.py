# distill/losses.py
# Embedding alignment losses between student and frozen-teacher graph embeddings.
import numpy as np

from core.errors import ContractError, DimensionError
from numcore import nn, ops
from numcore.tensor import Tensor


def _check_pair(op: str, student_emb: Tensor, teacher_emb: Tensor):
    if student_emb.shape != teacher_emb.shape or student_emb.ndim != 2:
        raise DimensionError(op, student_emb.shape, teacher_emb.shape)


def infonce_loss(student_emb, teacher_emb, temperature: float) -> Tensor:
    """Symmetric cross-entropy over the (B, B) cosine-similarity / temperature matrix.

    Row b is positive with row b of the other side; every other row in the batch
    is a negative. Averaged over both directions.
    """
    s, t = ops.as_tensor(student_emb), ops.as_tensor(teacher_emb)
    _check_pair("infonce_loss", s, t)
    b = s.shape[0]
    if b < 2:
        raise ContractError(f"InfoNCE needs at least 2 pairs per batch, got {b}")
    if temperature <= 0:
        raise ContractError(f"temperature must be positive, got {temperature}")
    logits = ops.einsum("if,jf->ij", nn.l2_normalize(s), nn.l2_normalize(t)) * (1.0 / temperature)
    positives = np.eye(b) * (-1.0 / b)
    student_to_teacher = ops.sum_(ops.log_softmax(logits) * positives)
    teacher_to_student = ops.sum_(ops.log_softmax(ops.transpose(logits, (1, 0))) * positives)
    return (student_to_teacher + teacher_to_student) * 0.5


def l1_embed_loss(student_emb, teacher_emb) -> Tensor:
    s, t = ops.as_tensor(student_emb), ops.as_tensor(teacher_emb)
    if s.shape != t.shape:
        raise DimensionError("l1_embed_loss", s.shape, t.shape)
    return ops.mean(ops.abs_(s - t))


def mean_cosine(student_emb: np.ndarray, teacher_emb: np.ndarray, eps: float = 1e-12) -> float:
    """Mean over rows of cos(student_b, teacher_b)."""
    s, t = np.asarray(student_emb), np.asarray(teacher_emb)
    dots = (s * t).sum(axis=-1)
    norms = np.sqrt((s * s).sum(axis=-1) * (t * t).sum(axis=-1)) + eps
    return float(np.mean(dots / norms))
