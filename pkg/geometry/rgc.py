# geometry/rgc.py
# Runtime Geometry Calculation: angle and dihedral features from per-node
# aggregated direction vectors, the explicit triplet/quadruplet oracles they
# replace, and the vector-scalar interaction update over intersecting space.
import logging
from dataclasses import dataclass

import numpy as np

from geometry.geom import DirectionField, VecFeat, reject_pairs
from numcore import nn, ops
from numcore.tensor import Tensor

logger = logging.getLogger(__name__)

ANGLE_TOLERANCE = 1e-12
DIHEDRAL_TOLERANCE = 1e-11


@dataclass(frozen=True)
class RgcFeatures:
    angle_scalar: Tensor     # (N, F)
    dihedral_scalar: Tensor  # (N, N, F), zero diagonal
    agg_vec: VecFeat


def _off_diagonal(n: int) -> np.ndarray:
    return 1.0 - np.eye(n)


def channel_mix(v: VecFeat, w) -> Tensor:
    """Bias-free linear map on the channel axis: out[:, :, f] = sum_g w[f, g] v[:, :, g]."""
    return ops.einsum("iag,fg->iaf", v.values, w)


def neighbour_order(df: DirectionField) -> np.ndarray:
    """(N, N) per-row neighbour order by distance, ties broken by direction; row i starts with i.

    Summing in this order makes the aggregate independent of atom labels, bit for bit.
    """
    unit = df.unit_dirs.data
    return np.lexsort((unit[:, :, 2], unit[:, :, 1], unit[:, :, 0], df.dists.data), axis=-1)


def aggregate_vectors(df: DirectionField, per_edge_scale) -> VecFeat:
    """v_i[:, f] = sum_{j != i} per_edge_scale[i, j, f] * r_hat[i, j], summed nearest first."""
    n = df.n_atoms
    scale = ops.as_tensor(per_edge_scale) * _off_diagonal(n)[:, :, None]
    order = neighbour_order(df)[:, :, None]
    return VecFeat(ops.einsum("ijf,ija->iaf", ops.take_along(scale, order, axis=1),
                              ops.take_along(df.unit_dirs, order, axis=1)))


def unit_scales(n_atoms: int, n_channels: int = 1) -> np.ndarray:
    return np.ones((n_atoms, n_atoms, n_channels))


def angle_feature(v: VecFeat, was, wat) -> Tensor:
    """out[i, f] = <(Was v_i)[:, f], (Wat v_i)[:, f]> over the spatial axis."""
    return ops.einsum("iaf,iaf->if", channel_mix(v, was), channel_mix(v, wat))


def dihedral_feature(v: VecFeat, df: DirectionField, wds, wdt) -> Tensor:
    """out[i, j, f] = <(Wds Rej_{r_ij} v_i)[:, f], (Wdt Rej_{r_ji} v_j)[:, f]>, zero diagonal.

    Channel mixing commutes with rejection along a spatial axis, so the
    weights are applied once per node before the pairwise rejection.
    """
    source = reject_pairs(channel_mix(v, wds), df.unit_dirs)
    target = reject_pairs(channel_mix(v, wdt), df.unit_dirs)
    out = ops.einsum("ijaf,jiaf->ijf", source, target)
    return out * _off_diagonal(df.n_atoms)[:, :, None]


def rgc_features(df: DirectionField, per_edge_scale, was, wat, wds, wdt) -> RgcFeatures:
    agg = aggregate_vectors(df, per_edge_scale)
    return RgcFeatures(
        angle_scalar=angle_feature(agg, was, wat),
        dihedral_scalar=dihedral_feature(agg, df, wds, wdt),
        agg_vec=agg,
    )


# ─────────────────────────────────────────────────────
# Brute-force references
# ─────────────────────────────────────────────────────
def angle_oracle(df: DirectionField) -> np.ndarray:
    """out[i] = sum_{j != i} sum_{k != i} cos(theta_jik), from explicit pairwise dots. O(N^3)."""
    unit = df.unit_dirs.data
    n = unit.shape[0]
    out = np.zeros(n)
    for i in range(n):
        others = [j for j in range(n) if j != i]
        dirs = unit[i, others]
        out[i] = (dirs @ dirs.T).sum()
    return out


def dihedral_oracle(df: DirectionField) -> np.ndarray:
    """out[i, j] = sum over quadruplets k-i-j-l of |rej_k| |rej_l| cos(phi). O(N^4).

    phi is the dihedral of k-i-j-l about the i-j axis; a zero-length rejection
    contributes nothing.
    """
    unit = df.unit_dirs.data
    n = unit.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            ks = [k for k in range(n) if k != i and k != j]
            if not ks:
                continue
            axis = unit[i, j]
            rej_k = unit[i, ks] - np.outer(unit[i, ks] @ axis, axis)
            rej_l = unit[j, ks] - np.outer(unit[j, ks] @ -axis, -axis)
            norm_k = np.linalg.norm(rej_k, axis=1)
            norm_l = np.linalg.norm(rej_l, axis=1)
            lengths = np.outer(norm_k, norm_l)
            with np.errstate(invalid="ignore", divide="ignore"):
                cos_phi = np.where(lengths > 0.0, (rej_k @ rej_l.T) / lengths, 0.0)
            out[i, j] = (lengths * cos_phi).sum()
    return out


# ─────────────────────────────────────────────────────
# Vector-scalar interaction over intersecting space
# ─────────────────────────────────────────────────────
def visis_update(h: Tensor, f_edge: Tensor, rgc: RgcFeatures, mlp_params: dict[str, Tensor],
                 prefix: str = "visis") -> tuple[Tensor, Tensor]:
    """h' = h + phi_h(<v_i, v_i>), f' = f + phi_f(<Rej v_i, Rej v_j>), residual form.

    phi_h and phi_f are one-hidden-layer SiLU MLPs read from
    `{prefix}.node.*` and `{prefix}.edge.*`.
    """
    n = h.shape[0]
    h_new = h + nn.mlp(rgc.angle_scalar, mlp_params, f"{prefix}.node")
    edge_update = nn.mlp(rgc.dihedral_scalar, mlp_params, f"{prefix}.edge")
    f_new = f_edge + edge_update * _off_diagonal(n)[:, :, None]
    return h_new, f_new
