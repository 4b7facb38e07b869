# models/ordering.py
# Relabelling-invariant atom order. Encoders reorder their inputs by this key
# first, so every floating-point sum runs in the same order whatever the input
# labelling was.
import numpy as np
from scipy.spatial.distance import pdist, squareform

from geometry.geom import Conformer
from molecules.graph2d import MolGraph, SpdMatrix


def canonical_order(atomic_numbers, graph: MolGraph | None = None, spd: SpdMatrix | None = None,
                    conformer: Conformer | None = None) -> np.ndarray:
    """Permutation `perm` such that new atom k is old atom perm[k].

    Key per atom, most significant first: atomic number, the categorical graph
    features, the sorted SPD row, the sorted distance row, then the coordinates.
    With a conformer no two atoms tie; without one, atoms with equal keys keep
    their input order.
    """
    columns = [np.asarray(atomic_numbers, dtype=np.float64)[:, None]]
    if graph is not None:
        columns.append(np.stack([graph.aromatic, graph.charge, graph.chirality, graph.degree,
                                 graph.num_h, graph.hybridization], axis=1).astype(np.float64))
    if spd is not None:
        columns.append(np.sort(spd.spd, axis=1).astype(np.float64))
    if conformer is not None:
        if conformer.n_atoms > 1:
            columns.append(np.sort(squareform(pdist(conformer.positions)), axis=1))
        columns.append(conformer.positions)
    key = np.hstack(columns)
    return np.lexsort(key.T[::-1])
