# molecules/graph2d.py
# 2D molecular graphs: validated RDKit features, shortest-path encodings and
# the 2D node/attention-bias terms built on them.
import logging
from dataclasses import dataclass

import numpy as np
from pydantic import ValidationError
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from core.errors import ConsistencyError, ContractError, DimensionError, SchemaError
from molecules.records import AtomRecord, MoleculeRecord
from numcore import ops
from numcore.tensor import Tensor

logger = logging.getLogger(__name__)

UNREACHABLE = -1
DEFAULT_SPD_CAP = 20

NODE_FIELDS = ("aromatic", "charge", "chirality", "degree", "num_h", "hybridization")
EDGE_FIELDS = ("dir", "type", "in_ring")


@dataclass(frozen=True, eq=False)
class MolGraph:
    mol_id: str
    atomic_numbers: np.ndarray
    aromatic: np.ndarray
    charge: np.ndarray
    chirality: np.ndarray
    degree: np.ndarray
    num_h: np.ndarray
    hybridization: np.ndarray
    bonds: np.ndarray       # (M, 2), i < j, sorted
    bond_dir: np.ndarray
    bond_type: np.ndarray
    bond_in_ring: np.ndarray
    gap_ev: float | None = None

    @property
    def n_atoms(self) -> int:
        return self.atomic_numbers.shape[0]

    @property
    def n_bonds(self) -> int:
        return self.bonds.shape[0]

    def adjacency(self) -> csr_matrix:
        n, m = self.n_atoms, self.n_bonds
        rows = np.concatenate([self.bonds[:, 0], self.bonds[:, 1]])
        cols = np.concatenate([self.bonds[:, 1], self.bonds[:, 0]])
        return csr_matrix((np.ones(2 * m), (rows, cols)), shape=(n, n))


@dataclass(frozen=True, eq=False)
class SpdMatrix:
    spd: np.ndarray  # (N, N) hop counts clipped to cap, UNREACHABLE for disconnected pairs
    cap: int

    def table_index(self) -> np.ndarray:
        """Row of the SPD embedding table for every pair: 0..cap, then cap+1 for unreachable."""
        return np.where(self.spd == UNREACHABLE, self.cap + 1, self.spd)

    def permuted(self, perm) -> "SpdMatrix":
        perm = np.asarray(perm)
        return SpdMatrix(self.spd[np.ix_(perm, perm)], self.cap)


# ─────────────────────────────────────────────────────
# Loading and serialization
# ─────────────────────────────────────────────────────
def _validate(record) -> MoleculeRecord:
    if isinstance(record, MoleculeRecord):
        return record
    try:
        return MoleculeRecord.model_validate(record)
    except ValidationError as e:
        err = e.errors()[0]
        field = ".".join(str(part) for part in err["loc"]) or "record"
        raise SchemaError(field, err["msg"])


def _canonical_bonds(rec: MoleculeRecord) -> list[dict]:
    n = len(rec.atoms)
    seen = set()
    bonds = []
    for k, b in enumerate(rec.bonds):
        for end in ("i", "j"):
            if getattr(b, end) >= n:
                raise SchemaError(f"bonds.{k}.{end}", f"atom index {getattr(b, end)} out of range for {n} atoms")
        if b.i == b.j:
            raise SchemaError(f"bonds.{k}", f"self-loop on atom {b.i}")
        pair = (min(b.i, b.j), max(b.i, b.j))
        if pair in seen:
            raise SchemaError(f"bonds.{k}", f"duplicate bond {pair}")
        seen.add(pair)
        bonds.append({"i": pair[0], "j": pair[1], "dir": b.dir, "type": b.type, "in_ring": b.in_ring})
    return sorted(bonds, key=lambda b: (b["i"], b["j"]))


def canonical_record(record) -> dict:
    """The record with defaults filled in and bonds as sorted (i < j) pairs."""
    rec = _validate(record)
    return {
        "id": rec.id,
        "atoms": [atom.model_dump() for atom in rec.atoms],
        "bonds": _canonical_bonds(rec),
        "gap_ev": rec.gap_ev,
    }


def load_molgraph(record) -> MolGraph:
    rec = _validate(record)
    bonds = _canonical_bonds(rec)
    n = len(rec.atoms)
    pairs = np.array([[b["i"], b["j"]] for b in bonds], dtype=np.int64).reshape(-1, 2)

    counted = np.bincount(pairs.ravel(), minlength=n)
    stored = np.array([a.degree for a in rec.atoms])
    if not np.array_equal(counted, stored):
        bad = int(np.flatnonzero(counted != stored)[0])
        raise ConsistencyError(
            f"{rec.id}: atom {bad} stores degree {stored[bad]} but has {counted[bad]} incident bonds")

    def column(name):
        return np.array([int(getattr(a, name)) for a in rec.atoms], dtype=np.int64)

    return MolGraph(
        mol_id=rec.id,
        atomic_numbers=column("z"),
        aromatic=column("aromatic"),
        charge=column("charge"),
        chirality=column("chirality"),
        degree=counted.astype(np.int64),
        num_h=column("num_h"),
        hybridization=column("hybridization"),
        bonds=pairs,
        bond_dir=np.array([b["dir"] for b in bonds], dtype=np.int64),
        bond_type=np.array([b["type"] for b in bonds], dtype=np.int64),
        bond_in_ring=np.array([int(b["in_ring"]) for b in bonds], dtype=np.int64),
        gap_ev=rec.gap_ev,
    )


def dump_molgraph(g: MolGraph) -> dict:
    atoms = [
        AtomRecord(
            z=int(g.atomic_numbers[k]), aromatic=bool(g.aromatic[k]), charge=int(g.charge[k]),
            chirality=int(g.chirality[k]), degree=int(g.degree[k]), num_h=int(g.num_h[k]),
            hybridization=int(g.hybridization[k]),
        ).model_dump()
        for k in range(g.n_atoms)
    ]
    bonds = [
        {"i": int(i), "j": int(j), "dir": int(d), "type": int(t), "in_ring": bool(r)}
        for (i, j), d, t, r in zip(g.bonds, g.bond_dir, g.bond_type, g.bond_in_ring)
    ]
    return {"id": g.mol_id, "atoms": atoms, "bonds": bonds, "gap_ev": g.gap_ev}


def bare_molgraph(mol_id: str, atomic_numbers) -> MolGraph:
    """A bond-free graph carrying only atomic numbers, for conformers without a record."""
    z = np.asarray(atomic_numbers, dtype=np.int64)
    return load_molgraph({"id": mol_id, "atoms": [{"z": int(v), "degree": 0} for v in z]})


def permute_molgraph(g: MolGraph, perm) -> MolGraph:
    """Relabel atoms so that new atom k is old atom perm[k]."""
    perm = np.asarray(perm, dtype=np.int64)
    inverse = np.empty_like(perm)
    inverse[perm] = np.arange(perm.size)
    remapped = np.sort(inverse[g.bonds], axis=1) if g.n_bonds else g.bonds
    order = np.lexsort((remapped[:, 1], remapped[:, 0])) if g.n_bonds else np.arange(0)
    return MolGraph(
        mol_id=g.mol_id,
        atomic_numbers=g.atomic_numbers[perm],
        aromatic=g.aromatic[perm],
        charge=g.charge[perm],
        chirality=g.chirality[perm],
        degree=g.degree[perm],
        num_h=g.num_h[perm],
        hybridization=g.hybridization[perm],
        bonds=remapped[order].reshape(-1, 2),
        bond_dir=g.bond_dir[order],
        bond_type=g.bond_type[order],
        bond_in_ring=g.bond_in_ring[order],
        gap_ev=g.gap_ev,
    )


# ─────────────────────────────────────────────────────
# Structural encodings
# ─────────────────────────────────────────────────────
def shortest_paths(g: MolGraph, cap: int = DEFAULT_SPD_CAP) -> SpdMatrix:
    """Unweighted hop counts clipped to `cap`; UNREACHABLE for disconnected pairs."""
    if cap < 1:
        raise ContractError(f"SPD cap must be >= 1, got {cap}")
    hops = shortest_path(g.adjacency(), directed=False, unweighted=True)
    reachable = np.isfinite(hops)
    if (hops[reachable] > cap).any():
        logger.warning("%s: shortest paths longer than %d hops clipped", g.mol_id, cap)
    spd = np.where(reachable, np.minimum(np.where(reachable, hops, 0), cap), UNREACHABLE)
    return SpdMatrix(spd.astype(np.int64), cap)


def _clipped(values: np.ndarray, table: Tensor, name: str, mol_id: str) -> np.ndarray:
    cap = table.shape[0] - 1
    if (values > cap).any():
        logger.warning("%s: %s above %d clipped", mol_id, name, cap)
    return np.minimum(values, cap)


def psi2d_node(g: MolGraph, embeddings: dict[str, Tensor]) -> Tensor:
    """Sum of the learned embeddings of every categorical RDKit node feature plus degree.

    Tables are read from `psi2d.<field>`; degree and hydrogen counts beyond the
    last table row are clipped to it.
    """
    out = ops.take(embeddings["psi2d.aromatic"], g.aromatic)
    out = out + ops.take(embeddings["psi2d.charge"], g.charge + 5)
    out = out + ops.take(embeddings["psi2d.chirality"], g.chirality)
    out = out + ops.take(embeddings["psi2d.degree"],
                         _clipped(g.degree, embeddings["psi2d.degree"], "degree", g.mol_id))
    out = out + ops.take(embeddings["psi2d.num_h"],
                         _clipped(g.num_h, embeddings["psi2d.num_h"], "hydrogen count", g.mol_id))
    return out + ops.take(embeddings["psi2d.hybridization"], g.hybridization)


def psi2d_bias(spd: SpdMatrix, spd_embedding: Tensor, n_heads: int) -> Tensor:
    """bias[h, i, j] = spd_embedding[spd[i, j], h], shape (heads, N, N)."""
    if spd_embedding.shape != (spd.cap + 2, n_heads):
        raise DimensionError("psi2d_bias", spd_embedding.shape, (spd.cap + 2, n_heads))
    n = spd.spd.shape[0]
    rows = ops.take(spd_embedding, spd.table_index().ravel())
    return ops.transpose(ops.reshape(rows, (n, n, n_heads)), (2, 0, 1))
