from pathlib import Path

import numpy as np
import pytest

from geometry.geom import Conformer
from models.config import ModelConfig

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
CONFIGS = ROOT / "configs"


def random_conformer(n_atoms: int, seed: int, elements=(1, 6, 7, 8), mol_id: str = "") -> Conformer:
    rng = np.random.default_rng(seed)
    positions = rng.standard_normal((n_atoms, 3)) * 1.5
    z = rng.choice(elements, size=n_atoms)
    return Conformer(positions, z, mol_id=mol_id or f"rand-{n_atoms}-{seed}")


def chain_record(mol_id: str, z, bonds=None) -> dict:
    """Record for a linear chain (or the given bond list) with consistent degrees."""
    n = len(z)
    bonds = [(k, k + 1) for k in range(n - 1)] if bonds is None else bonds
    degree = np.zeros(n, dtype=int)
    for i, j in bonds:
        degree[i] += 1
        degree[j] += 1
    return {
        "id": mol_id,
        "atoms": [{"z": int(z[k]), "degree": int(degree[k])} for k in range(n)],
        "bonds": [{"i": i, "j": j} for i, j in bonds],
    }


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def tiny_cfg():
    return ModelConfig(n_blocks=1, hidden_dim=8, n_heads=2, n_rbf=4, spd_cap=6, max_degree=4, max_num_h=4,
                       embedding_dropout=0.0, activation_dropout=0.0, attention_dropout=0.0, drop_path=0.0)


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def configs_dir():
    return CONFIGS
