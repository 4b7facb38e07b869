# distill/corpus.py
# Paired (optimized, generated) conformers sharing one molecule id.
import logging
from dataclasses import dataclass

import numpy as np

from core.errors import PairingError
from geometry.geom import Conformer, Modality, with_positions
from models.modes import add_coordinate_noise
from molecules.formats import read_molecules, read_xyz
from molecules.graph2d import MolGraph
from molecules.synthetic import synthetic_molecules

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DistillPair:
    mol_id: str
    graph: MolGraph
    optimized: Conformer
    generated: Conformer


def check_pairs(pairs: list[DistillPair]):
    for pair in pairs:
        ids = {pair.mol_id, pair.graph.mol_id, pair.optimized.mol_id, pair.generated.mol_id}
        if len(ids) != 1:
            raise PairingError(f"pair {pair.mol_id} mixes molecule ids {sorted(ids)}")
        if not (np.array_equal(pair.graph.atomic_numbers, pair.optimized.atomic_numbers)
                and np.array_equal(pair.optimized.atomic_numbers, pair.generated.atomic_numbers)):
            raise PairingError(f"pair {pair.mol_id}: atom lists differ between graph and conformers")


def synthetic_pairs(count: int, sigma: float, seed: int) -> list[DistillPair]:
    """Optimized = clean synthetic geometry; generated = the same plus N(0, sigma^2) noise."""
    rng = np.random.default_rng(seed + 1)
    pairs = []
    for g, clean, _ in synthetic_molecules(count, seed, prefix="pair"):
        noisy = add_coordinate_noise(clean, sigma, rng, Modality.GENERATED)
        if noisy is clean:
            noisy = with_positions(clean, clean.positions, Modality.GENERATED)
        pairs.append(DistillPair(g.mol_id, g, clean, noisy))
    return pairs


def load_pairs(molecules_path, conformers_path) -> list[DistillPair]:
    """Join molecule records with optimized and generated XYZ frames by id."""
    graphs = {g.mol_id: g for g in read_molecules(molecules_path)}
    frames: dict[tuple[str, Modality], Conformer] = {}
    for c in read_xyz(conformers_path):
        frames[(c.mol_id, c.modality)] = c
    pairs = []
    for mol_id, g in graphs.items():
        optimized = frames.get((mol_id, Modality.OPTIMIZED))
        generated = frames.get((mol_id, Modality.GENERATED))
        if optimized is None or generated is None:
            raise PairingError(f"{mol_id}: needs both an optimized and a generated frame")
        pairs.append(DistillPair(mol_id, g, optimized, generated))
    unmatched = {mol_id for mol_id, _ in frames} - set(graphs)
    if unmatched:
        raise PairingError(f"conformers without a molecule record: {sorted(unmatched)}")
    check_pairs(pairs)
    logger.info("Paired %d molecules", len(pairs))
    return pairs
