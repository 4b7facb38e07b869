import json

import numpy as np
import pytest

from core.errors import InputFileError, SchemaError
from geometry.geom import Conformer, Modality
from molecules.formats import read_molecules, read_xyz, write_molecules, write_xyz
from molecules.synthetic import mean_pairwise_distance, synthetic_molecules
from tests.conftest import random_conformer


def test_read_fixture_molecules(fixtures_dir):
    graphs = read_molecules(fixtures_dir / "molecules.jsonl")
    assert [g.mol_id for g in graphs] == ["water", "ammonia", "methane", "formaldehyde", "methanol"]
    assert graphs[0].n_atoms == 3


def test_read_fixture_conformers(fixtures_dir):
    conformers = read_xyz(fixtures_dir / "conformers.xyz")
    assert len(conformers) == 5
    assert conformers[0].mol_id == "water"
    assert conformers[0].atomic_numbers.tolist() == [8, 1, 1]
    assert all(c.modality is Modality.OPTIMIZED for c in conformers)


def test_xyz_round_trip_is_bitwise(tmp_path):
    confs = [random_conformer(4, seed=1, mol_id="a"),
             Conformer(random_conformer(3, seed=2).positions, [6, 8, 1], Modality.GENERATED, "b")]
    write_xyz(tmp_path / "c.xyz", confs)
    back = read_xyz(tmp_path / "c.xyz")
    for orig, read in zip(confs, back):
        assert np.array_equal(orig.positions, read.positions)
        assert orig.mol_id == read.mol_id and orig.modality is read.modality


def test_molecules_round_trip(tmp_path, fixtures_dir):
    graphs = read_molecules(fixtures_dir / "molecules.jsonl")
    write_molecules(tmp_path / "m.jsonl", graphs)
    again = read_molecules(tmp_path / "m.jsonl")
    assert [g.bonds.tolist() for g in again] == [g.bonds.tolist() for g in graphs]


def test_schema_error_names_line(tmp_path):
    bad = {"id": "x", "atoms": [{"z": 6, "degree": 0, "hybridization": 9}]}
    (tmp_path / "m.jsonl").write_text('{"id":"ok","atoms":[{"z":6,"degree":0}]}\n' + json.dumps(bad) + "\n")
    with pytest.raises(SchemaError) as exc:
        read_molecules(tmp_path / "m.jsonl")
    assert exc.value.field == "m.jsonl:2:atoms.0.hybridization"


@pytest.mark.parametrize("text", [
    "2\nid=a\nC 0 0 0\n",
    "x\nid=a\nC 0 0 0\n",
    "1\nid=a\nXx 0 0 0\n",
    "1\nid=a\nC 0 zero 0\n",
    "1\nid=a modality=relaxed\nC 0 0 0\n",
])
def test_malformed_xyz(tmp_path, text):
    (tmp_path / "bad.xyz").write_text(text)
    with pytest.raises(InputFileError):
        read_xyz(tmp_path / "bad.xyz")


def test_missing_file(tmp_path):
    with pytest.raises(InputFileError) as exc:
        read_xyz(tmp_path / "nope.xyz")
    assert exc.value.exit_code == 3


def test_synthetic_molecules_are_seeded():
    a = synthetic_molecules(5, seed=3)
    b = synthetic_molecules(5, seed=3)
    for x, y in zip(a, b):
        assert np.array_equal(x.conformer.positions, y.conformer.positions)
        assert x.target == y.target == mean_pairwise_distance(x.conformer)
        assert 4 <= x.graph.n_atoms <= 9
        assert x.graph.n_bonds == x.graph.n_atoms - 1
