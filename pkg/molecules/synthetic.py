# molecules/synthetic.py
# Seeded synthetic molecules: bonded chains of H/C/N/O with random-walk
# geometries, used as the toy training and distillation corpora.
import logging
from typing import NamedTuple

import numpy as np
from scipy.spatial.distance import pdist

from geometry.geom import Conformer, Modality
from molecules.graph2d import MolGraph, load_molgraph
from molecules.records import Hybridization

logger = logging.getLogger(__name__)

CHAIN_ELEMENTS = (1, 6, 7, 8)
MIN_DISTANCE = 0.9


class SyntheticMolecule(NamedTuple):
    graph: MolGraph
    conformer: Conformer
    target: float


def mean_pairwise_distance(c: Conformer) -> float:
    if c.n_atoms < 2:
        return 0.0
    return float(np.mean(pdist(c.positions)))


def _chain_positions(n: int, rng: np.random.Generator) -> np.ndarray:
    # random walk with bond lengths in [1.0, 1.6] Å, redrawn until no pair is closer than MIN_DISTANCE
    while True:
        steps = rng.standard_normal((n - 1, 3))
        steps /= np.linalg.norm(steps, axis=1, keepdims=True)
        steps *= rng.uniform(1.0, 1.6, size=(n - 1, 1))
        pos = np.vstack([np.zeros((1, 3)), np.cumsum(steps, axis=0)])
        if n < 3 or pdist(pos).min() >= MIN_DISTANCE:
            return pos - pos.mean(axis=0)


def _chain_record(mol_id: str, z: np.ndarray, target: float) -> dict:
    n = z.size
    atoms = [
        {"z": int(z[k]), "degree": int((k > 0) + (k < n - 1)), "hybridization": int(Hybridization.SP3)}
        for k in range(n)
    ]
    bonds = [{"i": k, "j": k + 1} for k in range(n - 1)]
    return {"id": mol_id, "atoms": atoms, "bonds": bonds, "gap_ev": target}


def synthetic_molecules(count: int, seed: int, min_atoms: int = 4, max_atoms: int = 9,
                        prefix: str = "syn") -> list[SyntheticMolecule]:
    """`count` chains; the target is the mean pairwise distance of the conformer (Å)."""
    rng = np.random.default_rng(seed)
    molecules = []
    for k in range(count):
        n = int(rng.integers(min_atoms, max_atoms + 1))
        z = rng.choice(CHAIN_ELEMENTS, size=n)
        mol_id = f"{prefix}-{k:05d}"
        conformer = Conformer(_chain_positions(n, rng), z, Modality.OPTIMIZED, mol_id)
        target = mean_pairwise_distance(conformer)
        molecules.append(SyntheticMolecule(load_molgraph(_chain_record(mol_id, z, target)), conformer, target))
    logger.debug("Generated %d synthetic molecules (seed %d)", count, seed)
    return molecules
