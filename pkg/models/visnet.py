# models/visnet.py
# Compact ViSNet encoder: atom types and coordinates in, mean-pooled graph
# embedding out. The student variant adds zero-initialized RDKit node and
# bond embeddings on top of the same blocks.
import logging
from typing import Mapping

import numpy as np

from core.errors import DimensionError
from geometry.geom import Conformer, direction_field, permute_conformer
from geometry.rgc import rgc_features, visis_update
from models.config import VisNetConfig
from models.ordering import canonical_order
from models.params import ParamInit, Params, copy_params
from molecules.graph2d import MolGraph, permute_molgraph, psi2d_node
from numcore import nn, ops
from numcore.tensor import Tensor

logger = logging.getLogger(__name__)

N_ELEMENTS = 119

CHEM_NODE = {"aromatic": 2, "charge": 11, "chirality": 4, "hybridization": 6}
CHEM_BOND = {"bond.type": 4, "bond.dir": 4, "bond.ring": 2}


def _chem_shapes(cfg: VisNetConfig) -> dict[str, int]:
    rows = {f"psi2d.{k}": v for k, v in CHEM_NODE.items()}
    rows["psi2d.degree"] = cfg.max_degree + 1
    rows["psi2d.num_h"] = cfg.max_num_h + 1
    rows.update(CHEM_BOND)
    return rows


def add_chem_tables(params: Params, cfg: VisNetConfig) -> Params:
    """Zero RDKit feature tables, so the encoder output is unchanged until they train."""
    for name, rows in _chem_shapes(cfg).items():
        params.setdefault(name, np.zeros((rows, cfg.hidden_dim)))
    return params


def init_visnet(cfg: VisNetConfig, seed: int | None = None, target_mean: float = 0.0) -> Params:
    F = cfg.hidden_dim
    init = ParamInit(cfg.seed if seed is None else seed)
    init.embedding("embed.atom", N_ELEMENTS, F, std=1.0)
    init.matrix("edge.embed", cfg.n_rbf, F)
    for b in range(cfg.n_blocks):
        prefix = f"block{b}"
        for name in ("was", "wat", "wds", "wdt"):
            init.matrix(f"{prefix}.{name}", F, F)
        init.mlp(f"{prefix}.visis.node", F, F, F)
        init.mlp(f"{prefix}.visis.edge", F, F, F)
        init.matrix(f"{prefix}.msg", F, F)
        init.layer_norm(f"{prefix}.ln", F)
    init.mlp("decoder", F, F, 1, zero_out=True)
    init.params["decoder.b2"][:] = target_mean
    params = init.params
    return add_chem_tables(params, cfg) if cfg.use_chem_features else params


def student_from_teacher(teacher_params: Params, student_cfg: VisNetConfig) -> Params:
    student = copy_params(teacher_params)
    return add_chem_tables(student, student_cfg) if student_cfg.use_chem_features else student


def bond_features(g: MolGraph, params: Mapping[str, Tensor]) -> Tensor:
    """RDKit bond embeddings scattered onto both directions of every bond, (N, N, F)."""
    n, m = g.n_atoms, g.n_bonds
    incidence = np.zeros((n, n, m))
    k = np.arange(m)
    incidence[g.bonds[:, 0], g.bonds[:, 1], k] = 1.0
    incidence[g.bonds[:, 1], g.bonds[:, 0], k] = 1.0
    per_bond = (ops.take(params["bond.type"], g.bond_type) + ops.take(params["bond.dir"], g.bond_dir)
                + ops.take(params["bond.ring"], g.bond_in_ring))
    return ops.einsum("ijm,mf->ijf", incidence, per_bond)


def visnet_encode(c: Conformer, params: Mapping, cfg: VisNetConfig, graph: MolGraph | None = None,
                  positions: Tensor | None = None) -> Tensor:
    """Per-atom hidden states (N, F) in canonical order (atomic number, sorted distance row)."""
    p = {name: ops.as_tensor(v) for name, v in params.items()}
    if graph is not None and graph.n_atoms != c.n_atoms:
        raise DimensionError("visnet_encode", (graph.n_atoms,), (c.n_atoms,))
    order = canonical_order(c.atomic_numbers, conformer=c)
    c = permute_conformer(c, order)
    df = direction_field(c, ops.take(positions, order) if positions is not None else None)
    n = c.n_atoms

    h = ops.take(p["embed.atom"], c.atomic_numbers)
    f = nn.linear(nn.gaussian_rbf(df.dists, cfg.n_rbf, cfg.rbf_cutoff), p["edge.embed"])
    if cfg.use_chem_features and graph is not None:
        graph = permute_molgraph(graph, order)
        h = h + psi2d_node(graph, p)
        if graph.n_bonds:
            f = f + bond_features(graph, p)

    off_diagonal = (1.0 - np.eye(n))[:, :, None]
    for b in range(cfg.n_blocks):
        prefix = f"block{b}"
        rgc = rgc_features(df, f, p[f"{prefix}.was"], p[f"{prefix}.wat"], p[f"{prefix}.wds"], p[f"{prefix}.wdt"])
        h, f = visis_update(h, f, rgc, p, prefix=f"{prefix}.visis")
        message = ops.einsum("ijf,jf->if", f * off_diagonal, nn.linear(h, p[f"{prefix}.msg"])) * (1.0 / n)
        h = nn.layer_norm(h + message, p[f"{prefix}.ln.gamma"], p[f"{prefix}.ln.beta"])
    return h


def visnet_embed(c: Conformer, params: Mapping, cfg: VisNetConfig, graph: MolGraph | None = None,
                 positions: Tensor | None = None) -> Tensor:
    """Graph embedding (F,): mean over atoms of the encoder output."""
    return ops.mean(visnet_encode(c, params, cfg, graph, positions), axis=0)


def visnet_predict(embedding: Tensor, params: Mapping) -> Tensor:
    p = {name: ops.as_tensor(v) for name, v in params.items() if name.startswith("decoder.")}
    return ops.reshape(nn.mlp(ops.reshape(embedding, (1, -1)), p, "decoder"), ())
