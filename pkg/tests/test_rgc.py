import numpy as np
import pytest

from core.errors import ContractError
from geometry.benchmark import benchmark_conformer, fit_slope, scaling_benchmark
from geometry.geom import Conformer, direction_field, permute_conformer, random_rotation, rotate_conformer
from geometry.rgc import (ANGLE_TOLERANCE, DIHEDRAL_TOLERANCE, aggregate_vectors, angle_feature, angle_oracle,
                          dihedral_feature, dihedral_oracle, neighbour_order, rgc_features, unit_scales,
                          visis_update)
from models.params import ParamInit
from numcore import ops
from numcore.gradcheck import finite_diff_check
from numcore.tensor import Tensor
from tests.conftest import random_conformer

EYE = np.eye(1)


def _scalar_features(c: Conformer):
    df = direction_field(c)
    agg = aggregate_vectors(df, unit_scales(c.n_atoms))
    return df, agg, angle_feature(agg, EYE, EYE).data[:, 0], dihedral_feature(agg, df, EYE, EYE).data[:, :, 0]


# ─────────────────────────────────────────────────────
# Aggregation and examples
# ─────────────────────────────────────────────────────
def test_aggregate_two_atoms():
    c = Conformer([[0, 0, 0], [0, 3.0, 0]], [6, 8])
    df, agg, _, _ = _scalar_features(c)
    assert np.array_equal(agg.values.data[0, :, 0], [0, 1.0, 0])
    assert np.array_equal(agg.values.data[1, :, 0], [0, -1.0, 0])


def test_aggregate_cancels_for_centrosymmetric_neighbors():
    c = Conformer([[0, 0, 0], [1.0, 0, 0], [-1.0, 0, 0]], [6, 1, 1])
    _, agg, _, _ = _scalar_features(c)
    assert np.array_equal(agg.values.data[0], np.zeros((3, 1)))


def test_aggregate_matches_explicit_loop(rng):
    c = random_conformer(6, seed=1)
    df = direction_field(c)
    scale = rng.standard_normal((6, 6, 3))
    agg = aggregate_vectors(df, scale).values.data
    for i in range(6):
        expected = sum(np.outer(df.unit_dirs.data[i, j], scale[i, j]) for j in range(6) if j != i)
        np.testing.assert_allclose(agg[i], expected, atol=1e-13)


def test_angle_single_neighbor_and_right_angle():
    _, _, angle, _ = _scalar_features(Conformer([[0, 0, 0], [1.5, 0, 0]], [6, 6]))
    assert angle[0] == pytest.approx(1.0, abs=1e-15)
    _, _, angle, _ = _scalar_features(Conformer([[0, 0, 0], [1.0, 0, 0], [0, 1.0, 0]], [6, 1, 1]))
    assert angle[0] == pytest.approx(2.0, abs=1e-15)


def test_angle_with_zero_weights():
    c = random_conformer(5, seed=0)
    df = direction_field(c)
    agg = aggregate_vectors(df, unit_scales(5, 3))
    out = angle_feature(agg, np.zeros((3, 3)), np.eye(3)).data
    assert np.array_equal(out, np.zeros((5, 3)))


def test_angle_oracle_equilateral_triangle():
    h = np.sqrt(3) / 2
    df = direction_field(Conformer([[0, 0, 0], [1.0, 0, 0], [0.5, h, 0]], [6, 6, 6]))
    np.testing.assert_allclose(angle_oracle(df), 3.0, atol=1e-14)


def test_dihedral_vanishes_on_linear_chain():
    _, _, _, dihedral = _scalar_features(Conformer([[0, 0, 0], [1.0, 0, 0], [2.5, 0, 0]], [6, 6, 6]))
    assert np.abs(dihedral).max() < 1e-15


def test_dihedral_two_atoms_is_zero():
    _, _, _, dihedral = _scalar_features(Conformer([[0, 0, 0], [1.0, 1.0, 0]], [6, 6]))
    assert np.abs(dihedral).max() < 1e-30


# ─────────────────────────────────────────────────────
# Fast path against the brute-force references
# ─────────────────────────────────────────────────────
@pytest.mark.parametrize("n_atoms", range(3, 17))
def test_matches_oracles(n_atoms):
    for seed in range(3):
        c = random_conformer(n_atoms, seed=100 * n_atoms + seed)
        df, _, angle, dihedral = _scalar_features(c)
        assert np.abs(angle - angle_oracle(df)).max() <= ANGLE_TOLERANCE
        assert np.abs(dihedral - dihedral_oracle(df)).max() <= DIHEDRAL_TOLERANCE


@pytest.mark.slow
def test_matches_oracles_on_200_conformers():
    sizes = np.random.default_rng(2024).integers(3, 17, size=200)
    assert set(sizes.tolist()) == set(range(3, 17))
    for k, n in enumerate(sizes):
        c = random_conformer(int(n), seed=10_000 + k)
        df, _, angle, dihedral = _scalar_features(c)
        assert np.abs(angle - angle_oracle(df)).max() <= ANGLE_TOLERANCE, (k, n)
        assert np.abs(dihedral - dihedral_oracle(df)).max() <= DIHEDRAL_TOLERANCE, (k, n)


# ─────────────────────────────────────────────────────
# Symmetry
# ─────────────────────────────────────────────────────
def _weighted(c: Conformer, weights: dict):
    df = direction_field(c)
    return rgc_features(df, unit_scales(c.n_atoms, 3), weights["was"], weights["wat"], weights["wds"], weights["wdt"])


@pytest.fixture
def weights(rng):
    return {name: rng.standard_normal((3, 3)) for name in ("was", "wat", "wds", "wdt")}


def test_rigid_motion_invariance(weights):
    c = random_conformer(9, seed=4)
    ref = _weighted(c, weights)
    for seed in range(20):
        moved = rotate_conformer(c, random_rotation(seed), t=np.random.default_rng(seed).standard_normal(3) * 5)
        out = _weighted(moved, weights)
        assert np.abs(out.angle_scalar.data - ref.angle_scalar.data).max() < 1e-10
        assert np.abs(out.dihedral_scalar.data - ref.dihedral_scalar.data).max() < 1e-10


def test_vector_equivariance(weights):
    c = random_conformer(8, seed=6)
    ref = _weighted(c, weights).agg_vec
    for seed in range(20):
        q = random_rotation(seed)
        out = _weighted(rotate_conformer(c, q), weights).agg_vec
        assert np.abs(out.values.data - ref.rotated(q).values.data).max() < 1e-12


STAR = Conformer([[0, 0, 0], [1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0], [-1.0, 0, 0]], [6, 1, 1, 1, 1])


@pytest.mark.parametrize("c", [random_conformer(10, seed=8), STAR], ids=["random", "equal-distances"])
def test_permutation_equivariance_is_exact(weights, c):
    ref = _weighted(c, weights)
    for seed in range(10):
        perm = np.random.default_rng(seed).permutation(c.n_atoms)
        out = _weighted(permute_conformer(c, perm), weights)
        assert np.array_equal(out.agg_vec.values.data, ref.agg_vec.values.data[perm])
        assert np.array_equal(out.angle_scalar.data, ref.angle_scalar.data[perm])
        assert np.array_equal(out.dihedral_scalar.data, ref.dihedral_scalar.data[np.ix_(perm, perm)])


def test_neighbour_order_starts_with_self():
    df = direction_field(random_conformer(7, seed=2))
    order = neighbour_order(df)
    assert np.array_equal(order[:, 0], np.arange(7))
    assert all(np.all(np.diff(df.dists.data[i, order[i]]) >= 0) for i in range(7))


def test_neighbour_order_breaks_distance_ties_by_direction():
    order = neighbour_order(direction_field(STAR))
    # from the centre all four neighbours sit at 1 Å; x = -1 comes first
    assert order[0].tolist() == [0, 4, 3, 2, 1]


def test_gradients_against_finite_differences(rng):
    c = random_conformer(5, seed=12)
    params = {"pos": c.positions, **{name: rng.standard_normal((2, 2)) for name in ("was", "wat", "wds", "wdt")}}

    def f(p):
        df = direction_field(c, positions=p["pos"])
        feats = rgc_features(df, unit_scales(5, 2), p["was"], p["wat"], p["wds"], p["wdt"])
        return ops.sum_(feats.angle_scalar) + ops.sum_(feats.dihedral_scalar * 0.5)

    assert finite_diff_check(f, params) < 1e-5


# ─────────────────────────────────────────────────────
# ViS-IS update
# ─────────────────────────────────────────────────────
def _visis_params(F: int, seed: int = 0):
    init = ParamInit(seed)
    init.mlp("visis.node", F, F, F, zero_out=True)
    init.mlp("visis.edge", F, F, F, zero_out=True)
    return {k: Tensor(v) for k, v in init.params.items()}


def test_visis_is_identity_at_zero_centered_init(rng):
    c = random_conformer(6, seed=3)
    feats = rgc_features(direction_field(c), unit_scales(6, 4), np.eye(4), np.eye(4), np.eye(4), np.eye(4))
    h, f_edge = Tensor(rng.standard_normal((6, 4))), Tensor(rng.standard_normal((6, 6, 4)))
    h_new, f_new = visis_update(h, f_edge, feats, _visis_params(4))
    assert np.array_equal(h_new.data, h.data)
    assert np.array_equal(f_new.data, f_edge.data)


def test_visis_update_is_invariant(rng):
    c = random_conformer(6, seed=5)
    params = _visis_params(4)
    init = ParamInit(1)
    init.mlp("visis.node", 4, 4, 4)
    init.mlp("visis.edge", 4, 4, 4)
    params.update({k: Tensor(v) for k, v in init.params.items()})
    h, f_edge = Tensor(rng.standard_normal((6, 4))), Tensor(np.zeros((6, 6, 4)))
    w = [rng.standard_normal((4, 4)) for _ in range(4)]

    def run(conf):
        return visis_update(h, f_edge, rgc_features(direction_field(conf), unit_scales(6, 4), *w), params)

    ref_h, ref_f = run(c)
    out_h, out_f = run(rotate_conformer(c, random_rotation(3), t=[1.0, 2.0, 3.0]))
    assert np.abs(out_h.data - ref_h.data).max() < 1e-10
    assert np.abs(out_f.data - ref_f.data).max() < 1e-10
    assert np.array_equal(np.diagonal(out_f.data, axis1=0, axis2=1), np.zeros((4, 6)))


def test_visis_update_permutes_rows(rng):
    c = random_conformer(7, seed=9)
    init = ParamInit(4)
    init.mlp("visis.node", 4, 4, 4)
    init.mlp("visis.edge", 4, 4, 4)
    params = {k: Tensor(v) for k, v in init.params.items()}
    h, f_edge = rng.standard_normal((7, 4)), rng.standard_normal((7, 7, 4))
    w = [rng.standard_normal((4, 4)) for _ in range(4)]

    def run(conf, h_in, f_in):
        feats = rgc_features(direction_field(conf), unit_scales(7, 4), *w)
        return visis_update(Tensor(h_in), Tensor(f_in), feats, params)

    ref_h, ref_f = run(c, h, f_edge)
    for seed in range(5):
        perm = np.random.default_rng(seed).permutation(7)
        out_h, out_f = run(permute_conformer(c, perm), h[perm], f_edge[np.ix_(perm, perm)])
        assert np.array_equal(out_h.data, ref_h.data[perm])
        assert np.array_equal(out_f.data, ref_f.data[np.ix_(perm, perm)])


# ─────────────────────────────────────────────────────
# Scaling benchmark
# ─────────────────────────────────────────────────────
def test_benchmark_conformers_are_prefixes():
    big, small = benchmark_conformer(12, seed=0), benchmark_conformer(5, seed=0)
    assert np.array_equal(big.positions[:5], small.positions)


def test_fit_slope_recovers_power_law():
    sizes = [4, 8, 16, 32]
    assert fit_slope(sizes, [n ** 3 for n in sizes]) == pytest.approx(3.0, abs=1e-12)


def test_scaling_benchmark_small_sizes():
    result = scaling_benchmark([2, 4, 8, 16], repeats=1)
    assert [r.n_atoms for r in result.rows] == [2, 4, 8, 16]
    assert all(r.agrees for r in result.rows)
    assert set(result.slopes) == {"fast", "angle_oracle", "dihedral_oracle"}


@pytest.mark.parametrize("sizes", [[4, 8, 16], [4, 8, 16, 16], [16, 8, 4, 2], [4, 5, 6, 7]])
def test_scaling_benchmark_rejects_bad_sizes(sizes):
    with pytest.raises(ContractError):
        scaling_benchmark(sizes)


@pytest.mark.slow
def test_dihedral_oracle_scales_steeper_than_fast_path():
    result = scaling_benchmark([16, 32, 64, 128], repeats=3)
    assert all(r.agrees for r in result.rows)
    assert result.slope_gap >= 1.0
