# ensemble/aggregate.py
# Per-sample aggregation of member-model predictions.
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from core.errors import ContractError


class PredictionSet(BaseModel):
    model_config = ConfigDict(extra="forbid")

    sample_id: str
    values: list[float]
    member_ids: list[str]

    @field_validator("values")
    @classmethod
    def _finite(cls, values):
        if not values:
            raise ValueError("a prediction set needs at least one member value")
        if not all(math.isfinite(v) for v in values):
            raise ValueError("member values must be finite")
        return values

    @model_validator(mode="after")
    def _aligned(self):
        if len(self.member_ids) != len(self.values):
            raise ValueError("member_ids and values differ in length")
        return self


def trimmed_middle_mean(values, k: int) -> float:
    """Mean of the middle k sorted values.

    Drops floor((m - k) / 2) from the bottom and the rest from the top.
    """
    ordered = np.sort(np.asarray(values, dtype=np.float64))
    m = ordered.size
    if not 1 <= k <= m:
        raise ContractError(f"need 1 <= k <= m, got k={k}, m={m}")
    lower = (m - k) // 2
    middle = ordered[lower:lower + k]
    return math.fsum(middle) / k
