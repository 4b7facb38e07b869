# models/config.py
# Validated run configurations. Defaults are desk scale; the full-scale
# presets live in configs/*.toml.
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator


class EncoderVersion(str, Enum):
    V1 = "v1"
    V2 = "v2"


class Mode(str, Enum):
    TWO_D = "2d"
    THREE_D = "3d"
    JOINT = "joint"

    @property
    def uses_3d(self) -> bool:
        return self is not Mode.TWO_D

    @property
    def uses_2d(self) -> bool:
        return self is not Mode.THREE_D


class LossKind(str, Enum):
    INFONCE = "infonce"
    L1 = "l1"


class ModelConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_blocks: int = Field(default=2, ge=1)
    hidden_dim: int = Field(default=64, ge=1)
    n_heads: int = Field(default=4, ge=1)
    mode_probs: tuple[float, float, float] = (0.2, 0.2, 0.6)
    noise_scale: float = Field(default=0.2, ge=0.0)
    encoder_version: EncoderVersion = EncoderVersion.V1
    spd_cap: int = Field(default=20, ge=1)
    max_degree: int = Field(default=8, ge=1)
    max_num_h: int = Field(default=8, ge=1)
    n_rbf: int = Field(default=16, ge=1)
    rbf_cutoff: float = Field(default=8.0, gt=0.0)
    embedding_dropout: float = Field(default=0.0, ge=0.0, lt=1.0)
    activation_dropout: float = Field(default=0.1, ge=0.0, lt=1.0)
    attention_dropout: float = Field(default=0.1, ge=0.0, lt=1.0)
    drop_path: float = Field(default=0.1, ge=0.0, lt=1.0)
    seed: int = 0

    @model_validator(mode="after")
    def _check(self):
        if any(p < 0 for p in self.mode_probs) or abs(sum(self.mode_probs) - 1.0) > 1e-12:
            raise ValueError(f"mode_probs must be non-negative and sum to 1, got {self.mode_probs}")
        if self.hidden_dim % self.n_heads:
            raise ValueError(f"hidden_dim {self.hidden_dim} is not divisible by n_heads {self.n_heads}")
        return self

    @property
    def head_dim(self) -> int:
        return self.hidden_dim // self.n_heads


class VisNetConfig(BaseModel):
    """Compact ViSNet encoder: atomic types and coordinates, plus optional RDKit features."""
    model_config = ConfigDict(extra="forbid")

    n_blocks: int = Field(default=2, ge=1)
    hidden_dim: int = Field(default=32, ge=1)
    n_rbf: int = Field(default=16, ge=1)
    rbf_cutoff: float = Field(default=8.0, gt=0.0)
    use_chem_features: bool = False
    max_degree: int = Field(default=8, ge=1)
    max_num_h: int = Field(default=8, ge=1)
    seed: int = 0


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    steps: int = Field(default=5000, ge=1)
    warmup_steps: int = Field(default=100, ge=0)
    lr: float = Field(default=1e-3, gt=0.0)
    batch_size: int = Field(default=8, ge=1)
    beta1: float = Field(default=0.0, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    weight_decay: float = Field(default=0.0, ge=0.0)
    n_molecules: int = Field(default=2000, ge=1)
    eval_mode: Mode = Mode.JOINT
    standardize_targets: bool = True
    log_every: int = Field(default=100, ge=1)
    seed: int = 0


class DistillConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    loss_kind: LossKind = LossKind.INFONCE
    temperature: float = Field(default=0.1, gt=0.0)
    batch_size: int = Field(default=8, ge=1)
    gap_weight: float = Field(default=0.0, ge=0.0)
    lr: float = Field(default=1e-3, gt=0.0)
    lr_factor: float = Field(default=0.8, gt=0.0, lt=1.0)
    lr_min: float = Field(default=1e-7, ge=0.0)
    lr_patience: int = Field(default=15, ge=1)
    warmup_steps: int = Field(default=10, ge=0)
    total_epochs: int = Field(default=20, ge=1)
    beta1: float = Field(default=0.0, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    weight_decay: float = Field(default=0.0, ge=0.0)
    noise_sigma: float = Field(default=0.2, ge=0.0)
    n_molecules: int = Field(default=32, ge=2)
    init_student_from_teacher: bool = False
    # an epoch that does not raise the mean cosine is rolled back and retried at a reduced rate
    max_rollbacks: int = Field(default=10, ge=0)
    rollback_factor: float = Field(default=0.5, gt=0.0, lt=1.0)
    teacher: VisNetConfig = VisNetConfig()
    student: VisNetConfig = VisNetConfig(use_chem_features=True)
    seed: int = 0

    @model_validator(mode="after")
    def _check(self):
        if self.loss_kind is LossKind.INFONCE and self.batch_size < 2:
            raise ValueError("InfoNCE needs batch_size >= 2")
        if self.teacher.hidden_dim != self.student.hidden_dim:
            raise ValueError("teacher and student embeddings must share hidden_dim")
        if self.init_student_from_teacher and self.teacher.n_blocks != self.student.n_blocks:
            raise ValueError("copying the teacher into the student needs matching n_blocks")
        return self


class BenchConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    sizes: list[int] = [16, 32, 64, 128]
    repeats: int = Field(default=3, ge=1)
    min_slope_gap: float | None = None
    seed: int = 0


class CheckConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_trials: int = 20
    model: ModelConfig = ModelConfig(hidden_dim=16, n_heads=4)
    seed: int = 0


class OracleDiffConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    sizes: list[int] = [4, 8, 12]
    seed: int = 0


class EnsembleConfig(BaseModel):
    """Routing for predict-ensemble; deterministic, so no seed."""
    model_config = ConfigDict(extra="forbid")

    k: int = Field(default=10, ge=1)
    min_atoms: int = Field(default=4, ge=1)
