import numpy as np
import pytest
from scipy.spatial.distance import pdist, squareform
from scipy.spatial.transform import Rotation

from core.errors import ContractError, DegenerateGeometryError, DimensionError
from geometry.geom import (Conformer, Modality, direction_field, permute_conformer, random_rotation, reject,
                           reject_pairs, rotate_conformer, tensor_product)
from numcore import ops
from numcore.gradcheck import finite_diff_check
from tests.conftest import random_conformer


def test_direction_field_two_atoms():
    df = direction_field(Conformer([[0, 0, 0], [0, 0, 2.0]], [6, 6]))
    assert np.array_equal(df.unit_dirs.data[0, 1], [0, 0, 1.0])
    assert np.array_equal(df.unit_dirs.data[1, 0], [0, 0, -1.0])
    assert df.dists.data[0, 1] == 2.0
    assert np.array_equal(df.unit_dirs.data[0, 0], np.zeros(3))


def test_direction_field_properties():
    c = random_conformer(12, seed=3)
    df = direction_field(c)
    unit, dists = df.unit_dirs.data, df.dists.data
    assert np.array_equal(unit, -unit.transpose(1, 0, 2))
    np.testing.assert_allclose(dists, squareform(pdist(c.positions)), rtol=0, atol=1e-14)
    off = ~np.eye(12, dtype=bool)
    np.testing.assert_allclose(np.linalg.norm(unit, axis=-1)[off], 1.0, atol=1e-12)


def test_differentiable_direction_field_matches_exact():
    c = random_conformer(6, seed=5)
    exact = direction_field(c)
    tracked = direction_field(c, positions=ops.as_tensor(c.positions))
    np.testing.assert_allclose(tracked.unit_dirs.data, exact.unit_dirs.data, atol=1e-14)
    np.testing.assert_allclose(tracked.dists.data, exact.dists.data, atol=1e-14)


def test_direction_field_gradient():
    c = random_conformer(5, seed=7)

    def f(p):
        df = direction_field(c, positions=p["pos"])
        return ops.sum_(df.dists * df.dists) + ops.sum_(df.unit_dirs * np.arange(3.0))

    assert finite_diff_check(f, {"pos": c.positions}) < 1e-6


def test_coincident_atoms_are_rejected():
    with pytest.raises(DegenerateGeometryError) as exc:
        Conformer([[0, 0, 0], [1, 0, 0], [1, 0, 1e-9]], [1, 1, 1])
    assert exc.value.pair == (1, 2)


def test_conformer_validation():
    with pytest.raises(DimensionError):
        Conformer(np.zeros((3, 2)), [1, 1, 1])
    with pytest.raises(ContractError):
        Conformer(np.zeros((1, 3)), [0])
    c = Conformer([[0, 0, 0]], [8], modality="generated")
    assert c.modality is Modality.GENERATED


def test_tensor_product():
    out = tensor_product([2.0, 3.0], [1.0, 0.0, 0.0]).data
    assert np.array_equal(out, [[2.0, 3.0], [0, 0], [0, 0]])
    assert np.array_equal(tensor_product([0.0, 0.0], [1.0, 2.0, 3.0]).data, np.zeros((3, 2)))


def test_tensor_product_equivariance(rng):
    s, v = rng.standard_normal(4), rng.standard_normal(3)
    q = random_rotation(11)
    np.testing.assert_allclose(tensor_product(s, q @ v).data, q @ tensor_product(s, v).data, atol=1e-14)


def test_reject_examples():
    z = np.array([0, 0, 1.0])
    v = np.array([[1.0], [2.0], [3.0]])
    assert np.array_equal(reject(v, z).data, [[1.0], [2.0], [0.0]])
    along = np.array([[0.0], [0.0], [5.0]])
    assert np.array_equal(reject(along, z).data, np.zeros((3, 1)))
    with pytest.raises(ContractError):
        reject(v, [0, 0, 2.0])


def test_reject_is_orthogonal(rng):
    for _ in range(10):
        axis = rng.standard_normal(3)
        axis /= np.linalg.norm(axis)
        out = reject(rng.standard_normal((3, 4)), axis).data
        assert np.abs(axis @ out).max() < 1e-10


def test_reject_pairs_matches_single(rng):
    c = random_conformer(5, seed=2)
    df = direction_field(c)
    v = rng.standard_normal((5, 3, 2))
    batched = reject_pairs(ops.as_tensor(v), df.unit_dirs).data
    for i in range(5):
        assert np.array_equal(batched[i, i], v[i])
        for j in range(5):
            if i != j:
                np.testing.assert_allclose(batched[i, j], reject(v[i], df.unit_dirs.data[i, j]).data, atol=1e-15)


def test_random_rotation_is_proper():
    for seed in range(20):
        q = random_rotation(seed)
        np.testing.assert_allclose(q.T @ q, np.eye(3), atol=1e-12)
        assert np.linalg.det(q) == pytest.approx(1.0, abs=1e-12)
    assert np.array_equal(random_rotation(0, fixed_identity=True), np.eye(3))


def test_random_rotation_matches_quaternion_convention():
    w, x, y, z = np.random.default_rng(4).standard_normal(4)
    expected = Rotation.from_quat([x, y, z, w]).as_matrix()
    np.testing.assert_allclose(random_rotation(4), expected, atol=1e-12)


def test_rigid_motion_and_relabelling():
    c = random_conformer(7, seed=9)
    q = random_rotation(1)
    moved = rotate_conformer(c, q, t=[1.0, -2.0, 0.5])
    np.testing.assert_allclose(direction_field(moved).dists.data, direction_field(c).dists.data, atol=1e-12)
    perm = np.random.default_rng(0).permutation(7)
    p = permute_conformer(c, perm)
    assert np.array_equal(p.atomic_numbers, c.atomic_numbers[perm])
    assert np.array_equal(direction_field(p).dists.data, direction_field(c).dists.data[np.ix_(perm, perm)])
