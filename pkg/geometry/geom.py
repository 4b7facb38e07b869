# geometry/geom.py
# 3D primitives: conformers, direction fields, tensor products, vector rejection
# and rotation sampling. Spatial dimension is always 3 (Cartesian); F is the
# hidden channel count.
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.spatial.distance import pdist, squareform

from core.errors import ContractError, DegenerateGeometryError, DimensionError
from numcore import ops
from numcore.tensor import Tensor

logger = logging.getLogger(__name__)

MIN_SEPARATION = 1e-6


class Modality(str, Enum):
    OPTIMIZED = "optimized"
    GENERATED = "generated"


@dataclass(frozen=True, eq=False)
class Conformer:
    positions: np.ndarray
    atomic_numbers: np.ndarray
    modality: Modality = Modality.OPTIMIZED
    mol_id: str = ""

    def __post_init__(self):
        pos = np.array(self.positions, dtype=np.float64)
        z = np.array(self.atomic_numbers, dtype=np.int64)
        if pos.ndim != 2 or pos.shape[1] != 3 or z.shape != (pos.shape[0],):
            raise DimensionError("Conformer", pos.shape, z.shape)
        if pos.shape[0] < 1:
            raise ContractError("a conformer needs at least one atom")
        if (z < 1).any():
            raise ContractError(f"atomic numbers must be >= 1, got {z.min()}")
        if not np.isfinite(pos).all():
            raise ContractError("positions hold NaN or Inf")
        if pos.shape[0] > 1:
            d = squareform(pdist(pos))
            np.fill_diagonal(d, np.inf)
            i, j = np.unravel_index(np.argmin(d), d.shape)
            if d[i, j] < MIN_SEPARATION:
                raise DegenerateGeometryError(int(min(i, j)), int(max(i, j)), float(d[i, j]))
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "atomic_numbers", z)
        object.__setattr__(self, "modality", Modality(self.modality))

    @property
    def n_atoms(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class DirectionField:
    unit_dirs: Tensor  # (N, N, 3), r_hat[i, j] points from atom i to atom j
    dists: Tensor      # (N, N)

    @property
    def n_atoms(self) -> int:
        return self.dists.shape[0]


@dataclass(frozen=True)
class VecFeat:
    values: Tensor  # (N, 3, F)

    @property
    def n_channels(self) -> int:
        return self.values.shape[2]

    def rotated(self, q: np.ndarray) -> "VecFeat":
        return VecFeat(ops.einsum("ab,ibf->iaf", q, self.values))


def direction_field(c: Conformer, positions: Tensor | None = None) -> DirectionField:
    """Unit directions and distances over the fully connected graph.

    Pass `positions` (a tape tensor, same values as `c.positions` or a
    reordering of them) to differentiate through the field.
    """
    if positions is None:
        return _direction_field_exact(c.positions)
    n = positions.shape[0]
    eye = np.eye(n)
    diff = ops.reshape(positions, (1, n, 3)) - ops.reshape(positions, (n, 1, 3))
    sq = ops.sum_(diff * diff, axis=-1)
    _check_separation(sq.data)
    # sqrt(sq + I) - I keeps the diagonal at zero with a finite derivative
    dists = ops.sqrt(sq + eye) - eye
    unit = diff / ops.reshape(dists + eye, (n, n, 1))
    return DirectionField(unit, dists)


def _direction_field_exact(pos: np.ndarray) -> DirectionField:
    n = pos.shape[0]
    diff = pos[None, :, :] - pos[:, None, :]
    sq = (diff * diff).sum(axis=-1)
    _check_separation(sq)
    dists = np.sqrt(sq)
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(upper[:, :, None], diff / dists[:, :, None], 0.0)
    # lower triangle is the negated upper triangle
    unit = unit - unit.transpose(1, 0, 2)
    return DirectionField(Tensor(unit), Tensor(dists))


def _check_separation(sq: np.ndarray):
    n = sq.shape[0]
    if n < 2:
        return
    masked = sq + np.diag(np.full(n, np.inf))
    i, j = np.unravel_index(np.argmin(masked), masked.shape)
    if masked[i, j] < MIN_SEPARATION ** 2:
        raise DegenerateGeometryError(int(min(i, j)), int(max(i, j)), float(np.sqrt(masked[i, j])))


def tensor_product(s, v) -> Tensor:
    """out[a, f] = v[a] * s[f]; a scalar channel vector times a 3-vector."""
    return ops.einsum("a,f->af", v, s)


def reject(v, axis) -> Tensor:
    """Per channel, remove the component of v[:, f] along the unit vector `axis`."""
    v, axis = ops.as_tensor(v), ops.as_tensor(axis)
    if v.ndim != 2 or v.shape[0] != 3 or axis.shape != (3,):
        raise DimensionError("reject", v.shape, axis.shape)
    norm = float(np.linalg.norm(axis.data))
    if abs(norm - 1.0) > 1e-9:
        raise ContractError(f"rejection axis must be unit length, |axis| = {norm:.12f}")
    along = ops.einsum("a,af->f", axis, v)
    return v - ops.einsum("a,f->af", axis, along)


def reject_pairs(v: Tensor, unit_dirs: Tensor) -> Tensor:
    """Batched rejection: out[i, j] = reject(v[i], r_hat[i, j]), shape (N, N, 3, F).

    The diagonal axis is the zero vector, which leaves v[i] unchanged there.
    """
    along = ops.einsum("ibf,ijb->ijf", v, unit_dirs)
    return ops.reshape(v, (v.shape[0], 1, 3, v.shape[2])) - ops.einsum("ija,ijf->ijaf", unit_dirs, along)


def random_rotation(seed, fixed_identity: bool = False) -> np.ndarray:
    """Uniform draw from SO(3) through a normalized Gaussian quaternion."""
    if fixed_identity:
        return np.eye(3)
    rng = np.random.default_rng(seed)
    w, x, y, z = rng.standard_normal(4)
    norm = np.sqrt(w * w + x * x + y * y + z * z)
    w, x, y, z = w / norm, x / norm, y / norm, z / norm
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


# ─────────────────────────────────────────────────────
# Rigid motions and relabelling
# ─────────────────────────────────────────────────────
def rotate_conformer(c: Conformer, q: np.ndarray, t=None) -> Conformer:
    pos = c.positions @ np.asarray(q).T
    if t is not None:
        pos = pos + np.asarray(t)
    return Conformer(pos, c.atomic_numbers, c.modality, c.mol_id)


def permute_conformer(c: Conformer, perm) -> Conformer:
    perm = np.asarray(perm)
    return Conformer(c.positions[perm], c.atomic_numbers[perm], c.modality, c.mol_id)


def with_positions(c: Conformer, positions: np.ndarray, modality: Modality | None = None) -> Conformer:
    return Conformer(positions, c.atomic_numbers, modality or c.modality, c.mol_id)
