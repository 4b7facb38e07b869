# models/transformer_m.py
# Transformer-M-ViSNet: atom embeddings with 2D and RGC-angle terms, pre-norm
# attention blocks biased by SPD, Gaussian distance and RGC-dihedral terms,
# a graph token at row 0 and a mean-pooled two-layer decoder.
import logging
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from core.errors import ContractError, DimensionError, PairingError
from geometry.geom import Conformer, DirectionField, VecFeat, direction_field, permute_conformer
from geometry.rgc import aggregate_vectors, angle_feature, dihedral_feature
from models.config import EncoderVersion, Mode, ModelConfig
from models.ordering import canonical_order
from models.params import ParamInit, Params
from molecules.graph2d import MolGraph, SpdMatrix, permute_molgraph, psi2d_bias, psi2d_node, shortest_paths
from numcore import nn, ops
from numcore.tensor import Tensor

logger = logging.getLogger(__name__)

N_ELEMENTS = 119  # row z for atomic number z; row 0 unused

TensorMap = Mapping[str, Tensor | np.ndarray]


def init_params(cfg: ModelConfig, seed: int | None = None, target_mean: float = 0.0) -> Params:
    """Seeded parameters. The decoder output layer starts at zero with its bias at
    `target_mean`, so the untrained model is the constant predictor."""
    F, H = cfg.hidden_dim, cfg.n_heads
    init = ParamInit(cfg.seed if seed is None else seed)
    init.embedding("embed.atom", N_ELEMENTS, F)
    init.embedding("embed.token", 1, F)
    init.embedding("psi2d.aromatic", 2, F)
    init.embedding("psi2d.charge", 11, F)
    init.embedding("psi2d.chirality", 4, F)
    init.embedding("psi2d.degree", cfg.max_degree + 1, F)
    init.embedding("psi2d.num_h", cfg.max_num_h + 1, F)
    init.embedding("psi2d.hybridization", 6, F)
    init.embedding("psi2d.spd", cfg.spd_cap + 2, H)
    init.vector("token.spd", H)
    init.matrix("rbf.mix", cfg.n_rbf, H)
    init.vector("token.dist", H)
    init.matrix("angle.was", F, F)
    init.matrix("angle.wat", F, F)
    if cfg.encoder_version is EncoderVersion.V2:
        init.matrix("vec.pair", 2 * F, F)
    for b in range(cfg.n_blocks):
        prefix = f"block{b}"
        init.layer_norm(f"{prefix}.ln1", F)
        for name in ("wq", "wk", "wv", "wo"):
            init.matrix(f"{prefix}.{name}", F, F)
        init.zeros(f"{prefix}.bo", F)
        init.layer_norm(f"{prefix}.ln2", F)
        init.mlp(f"{prefix}.ffn", F, F, F)
        init.matrix(f"{prefix}.dih.wds", F, F)
        init.matrix(f"{prefix}.dih.wdt", F, F)
        init.matrix(f"{prefix}.dih.wdh", F, H)
    init.layer_norm("final_ln", F)
    init.mlp("decoder", F, F, 1, zero_out=True)
    init.params["decoder.b2"][:] = target_mean
    return init.params


def _tensors(params: TensorMap) -> dict[str, Tensor]:
    return {name: ops.as_tensor(v) for name, v in params.items()}


@dataclass(frozen=True)
class BiasStack:
    psi_2d: Tensor
    psi_3d_dist: Tensor
    psi_3d_dihedral: Tensor

    def total(self) -> Tensor:
        return self.psi_2d + self.psi_3d_dist + self.psi_3d_dihedral


# ─────────────────────────────────────────────────────
# Embedding
# ─────────────────────────────────────────────────────
def vector_features(x: Tensor, df: DirectionField, cfg: ModelConfig, params: TensorMap) -> VecFeat:
    """V = X ⊗ R. V1 scales r_hat[i, j] by the source features X_i; V2 by a linear
    map of [X_i ‖ X_j]."""
    n, F = x.shape
    source = ops.reshape(x, (n, 1, F)) * np.ones((1, n, 1))
    if cfg.encoder_version is EncoderVersion.V1:
        return aggregate_vectors(df, source)
    target = ops.reshape(x, (1, n, F)) * np.ones((n, 1, 1))
    scale = nn.linear(ops.concat([source, target], axis=2), ops.as_tensor(params["vec.pair"]))
    return aggregate_vectors(df, scale)


def check_pairing(g: MolGraph, c: Conformer, op: str):
    if c.n_atoms != g.n_atoms:
        raise DimensionError(op, (g.n_atoms,), (c.n_atoms,))
    if not np.array_equal(c.atomic_numbers, g.atomic_numbers):
        raise PairingError(f"{op}: conformer {c.mol_id} atoms differ from graph {g.mol_id}")


def embed_nodes(g: MolGraph, c: Conformer | None, cfg: ModelConfig, params: TensorMap, mode: Mode,
                df: DirectionField | None = None) -> tuple[Tensor, VecFeat | None]:
    """X0 = X + Ψ2D_node + Ψ3D_angle and the vector features V (None without a conformer)."""
    if mode.uses_3d != (c is not None):
        raise ContractError(f"mode {mode.value} {'needs' if mode.uses_3d else 'takes no'} conformer")
    if c is not None:
        check_pairing(g, c, "embed_nodes")
    p = _tensors(params)
    x = ops.take(p["embed.atom"], g.atomic_numbers)
    x0 = x + psi2d_node(g, p)
    if c is None:
        return x0, None
    df = df if df is not None else direction_field(c)
    v = vector_features(x, df, cfg, p)
    return x0 + angle_feature(v, p["angle.was"], p["angle.wat"]), v


# ─────────────────────────────────────────────────────
# Attention biases
# ─────────────────────────────────────────────────────
def distance_bias(df: DirectionField, rbf_mix, n_heads: int, cutoff: float = 8.0) -> Tensor:
    """bias[h, i, j] = sum_k rbf_k(d_ij) mix[k, h] over a Gaussian basis on [0, cutoff]."""
    rbf_mix = ops.as_tensor(rbf_mix)
    if rbf_mix.ndim != 2 or rbf_mix.shape[1] != n_heads:
        raise DimensionError("distance_bias", rbf_mix.shape, (rbf_mix.shape[0], n_heads))
    rbf = nn.gaussian_rbf(df.dists, rbf_mix.shape[0], cutoff)
    return ops.einsum("ijk,kh->hij", rbf, rbf_mix)


def dihedral_bias(v: VecFeat, df: DirectionField, params: TensorMap, prefix: str) -> Tensor:
    """Per-head dihedral bias: the RGC dihedral feature through a bias-free F -> heads map."""
    p = _tensors(params)
    feat = dihedral_feature(v, df, p[f"{prefix}.wds"], p[f"{prefix}.wdt"])
    return ops.einsum("ijf,fh->hij", feat, p[f"{prefix}.wdh"])


def pad_token(bias: Tensor, token) -> Tensor:
    """Grow (H, N, N) to (H, N+1, N+1) with the graph token's per-head value on row and column 0."""
    bias = ops.as_tensor(bias)
    h, n, _ = bias.shape
    token = ops.reshape(ops.as_tensor(token), (h, 1, 1))
    column = token * np.ones((1, n, 1))
    row = token * np.ones((1, 1, n + 1))
    return ops.concat([row, ops.concat([column, bias], axis=2)], axis=1)


# ─────────────────────────────────────────────────────
# Attention block
# ─────────────────────────────────────────────────────
def _split_heads(x: Tensor, cfg: ModelConfig) -> Tensor:
    n = x.shape[0]
    return ops.transpose(ops.reshape(x, (n, cfg.n_heads, cfg.head_dim)), (1, 0, 2))


def attention_weights(y: Tensor, bias_total: Tensor, params: TensorMap, prefix: str, cfg: ModelConfig) -> Tensor:
    """softmax(Q K^T / sqrt(d) + bias) per head, for already normalized inputs y."""
    p = _tensors(params)
    q = _split_heads(nn.linear(y, p[f"{prefix}.wq"]), cfg)
    k = _split_heads(nn.linear(y, p[f"{prefix}.wk"]), cfg)
    logits = ops.einsum("hid,hjd->hij", q, k) * (1.0 / math.sqrt(cfg.head_dim))
    return ops.softmax_rows(logits + bias_total)


def attention_block(x: Tensor, bias: BiasStack, params: TensorMap, prefix: str, cfg: ModelConfig,
                    rng: np.random.Generator | None = None) -> Tensor:
    """x + Attn(LN x), then + FFN(LN x). Dropout and drop-path only when `rng` is given."""
    p = _tensors(params)
    n = x.shape[0]
    y = nn.layer_norm(x, p[f"{prefix}.ln1.gamma"], p[f"{prefix}.ln1.beta"])
    a = nn.dropout(attention_weights(y, bias.total(), p, prefix, cfg), cfg.attention_dropout, rng)
    values = _split_heads(nn.linear(y, p[f"{prefix}.wv"]), cfg)
    mixed = ops.reshape(ops.transpose(ops.einsum("hij,hjd->hid", a, values), (1, 0, 2)), (n, cfg.hidden_dim))
    x = x + nn.drop_path(nn.linear(mixed, p[f"{prefix}.wo"], p[f"{prefix}.bo"]), cfg.drop_path, rng)

    y = nn.layer_norm(x, p[f"{prefix}.ln2.gamma"], p[f"{prefix}.ln2.beta"])
    hidden = ops.silu(nn.linear(y, p[f"{prefix}.ffn.w1"], p[f"{prefix}.ffn.b1"]))
    hidden = nn.dropout(hidden, cfg.activation_dropout, rng)
    return x + nn.drop_path(nn.linear(hidden, p[f"{prefix}.ffn.w2"], p[f"{prefix}.ffn.b2"]), cfg.drop_path, rng)


# ─────────────────────────────────────────────────────
# Encoder and readout
# ─────────────────────────────────────────────────────
def encode(g: MolGraph, c: Conformer | None, params: TensorMap, cfg: ModelConfig, mode: Mode = Mode.JOINT,
           positions: Tensor | None = None, spd: SpdMatrix | None = None,
           rng: np.random.Generator | None = None) -> Tensor:
    """Final hidden states (N+1, F) in canonical atom order, graph token at row 0.

    2D mode drops the conformer before anything else runs; 3D mode never looks at
    the SPD matrix. `positions` (tape tensor, input order) differentiates through
    the geometry.
    """
    p = _tensors(params)
    H = cfg.n_heads
    if not mode.uses_3d:
        c, positions = None, None
    elif c is None:
        raise ContractError(f"mode {mode.value} needs a conformer")
    else:
        check_pairing(g, c, "encode")
    if mode.uses_2d and spd is None:
        spd = shortest_paths(g, cfg.spd_cap)

    order = canonical_order(g.atomic_numbers, g, spd if mode.uses_2d else None, c)
    g = permute_molgraph(g, order)
    df = None
    if c is not None:
        c = permute_conformer(c, order)
        df = direction_field(c, ops.take(positions, order) if positions is not None else None)

    x0, v = embed_nodes(g, c, cfg, p, mode, df)
    x0 = nn.dropout(x0, cfg.embedding_dropout, rng)
    x = ops.concat([p["embed.token"], x0], axis=0)

    n = g.n_atoms + 1
    zeros = Tensor(np.zeros((H, n, n)))
    psi_2d = pad_token(psi2d_bias(spd.permuted(order), p["psi2d.spd"], H), p["token.spd"]) if mode.uses_2d else zeros
    psi_dist = pad_token(distance_bias(df, p["rbf.mix"], H, cfg.rbf_cutoff), p["token.dist"]) if mode.uses_3d else zeros
    for b in range(cfg.n_blocks):
        prefix = f"block{b}"
        psi_dih = pad_token(dihedral_bias(v, df, p, f"{prefix}.dih"), np.zeros(H)) if mode.uses_3d else zeros
        x = attention_block(x, BiasStack(psi_2d, psi_dist, psi_dih), p, prefix, cfg, rng)
    return nn.layer_norm(x, p["final_ln.gamma"], p["final_ln.beta"])


def readout_predict(x_final: Tensor, decoder_params: TensorMap) -> Tensor:
    """Mean over atom rows, then the two-layer decoder. Scalar tensor in eV."""
    pooled = ops.mean(x_final, axis=0, keepdims=True)
    return ops.reshape(nn.mlp(pooled, _tensors(decoder_params), "decoder"), ())


def atom_rows(x: Tensor) -> Tensor:
    return ops.take(x, np.arange(1, x.shape[0]))


def predict_gap(g: MolGraph, c: Conformer | None, params: TensorMap, cfg: ModelConfig, mode: Mode = Mode.JOINT,
                positions: Tensor | None = None, spd: SpdMatrix | None = None,
                rng: np.random.Generator | None = None) -> Tensor:
    x = encode(g, c, params, cfg, mode, positions, spd, rng)
    return readout_predict(atom_rows(x), params)
