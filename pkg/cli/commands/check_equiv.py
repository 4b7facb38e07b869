# cli/commands/check_equiv.py
# Symmetry and oracle suite over a set of conformers: rigid-motion invariance,
# equivariance, permutation behaviour, oracle agreement and the mode contract.
import argparse
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from cli.common import add_common_flags, check_paths, out_dir, print_table
from core.config import load_config
from core.errors import PropertyFailure, UsageError
from geometry.geom import (Conformer, direction_field, permute_conformer, random_rotation, reject,
                           rotate_conformer)
from geometry.rgc import (ANGLE_TOLERANCE, DIHEDRAL_TOLERANCE, aggregate_vectors, angle_feature, angle_oracle,
                          dihedral_feature, dihedral_oracle, unit_scales)
from models.config import CheckConfig, Mode, ModelConfig
from models.transformer_m import check_pairing, init_params, predict_gap
from molecules.formats import read_molecules, read_xyz
from molecules.graph2d import MolGraph, SpdMatrix, bare_molgraph, permute_molgraph
from storage.files import write_csv
from storage.manifest import RunManifest

logger = logging.getLogger(__name__)

REPORT_NAME = "check_equiv.csv"
ORACLE_MAX_ATOMS = 16
FAULTS = ("reject",)


@dataclass
class PropertyResult:
    name: str
    tolerance: float
    n_cases: int = 0
    max_deviation: float = 0.0

    def record(self, deviation: float):
        self.n_cases += 1
        self.max_deviation = max(self.max_deviation, float(deviation))

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance


def _broken_reject(v, axis):
    # removes only half of the axial component
    v, axis = np.asarray(v), np.asarray(axis)
    return v - 0.5 * np.outer(axis, axis @ v)


def _rgc_identity(c: Conformer):
    df = direction_field(c)
    eye = np.eye(1)
    agg = aggregate_vectors(df, unit_scales(c.n_atoms))
    return df, agg, angle_feature(agg, eye, eye).data[:, 0], dihedral_feature(agg, df, eye, eye).data[:, :, 0]


def _checked_params(cfg: ModelConfig, seed: int):
    params = init_params(cfg, seed=seed)
    # a zero decoder output layer would make every prediction identical
    rng = np.random.default_rng(seed + 7)
    params["decoder.w2"] = rng.normal(0.0, 1.0, size=params["decoder.w2"].shape)
    return params


def run_checks(conformers: list[Conformer], graphs: dict[str, MolGraph], n_trials: int, seed: int,
               model_cfg: ModelConfig, fault: str | None = None) -> list[PropertyResult]:
    if n_trials < 1:
        raise UsageError(f"n_trials must be >= 1, got {n_trials}")
    rejector: Callable = _broken_reject if fault == "reject" else (lambda v, axis: reject(v, axis).data)
    results = {r.name: r for r in (
        PropertyResult("direction_antisymmetry", 0.0),
        PropertyResult("rejection_orthogonality", 1e-10),
        PropertyResult("rgc_angle_oracle", ANGLE_TOLERANCE),
        PropertyResult("rgc_dihedral_oracle", DIHEDRAL_TOLERANCE),
        PropertyResult("rgc_rigid_motion_invariance", 1e-10),
        PropertyResult("vecfeat_equivariance", 1e-12),
        PropertyResult("rgc_permutation_equivariance", 0.0),
        PropertyResult("model_rigid_motion_invariance", 1e-9),
        PropertyResult("model_permutation_invariance", 0.0),
        PropertyResult("mode_2d_coordinate_independence", 0.0),
        PropertyResult("mode_3d_spd_independence", 0.0),
    )}
    params = _checked_params(model_cfg, seed)
    rng = np.random.default_rng(seed)

    for c in conformers:
        g = graphs.get(c.mol_id) or bare_molgraph(c.mol_id, c.atomic_numbers)
        check_pairing(g, c, f"check-equiv {c.mol_id}")
        n = c.n_atoms
        df, agg, angle, dihedral = _rgc_identity(c)
        unit = df.unit_dirs.data
        results["direction_antisymmetry"].record(np.abs(unit + unit.transpose(1, 0, 2)).max())
        results["rgc_angle_oracle"].record(np.abs(angle - angle_oracle(df)).max())
        if n <= ORACLE_MAX_ATOMS:
            results["rgc_dihedral_oracle"].record(np.abs(dihedral - dihedral_oracle(df)).max())
        for i in range(n):
            for j in range(n):
                if i != j:
                    v = rng.standard_normal((3, 4))
                    out = rejector(v, unit[i, j])
                    results["rejection_orthogonality"].record(np.abs(unit[i, j] @ out).max())

        base_joint = predict_gap(g, c, params, model_cfg, Mode.JOINT).item()
        base_2d = predict_gap(g, None, params, model_cfg, Mode.TWO_D).item()
        base_3d = predict_gap(g, c, params, model_cfg, Mode.THREE_D).item()
        for t in range(n_trials):
            q = random_rotation(seed * 1000 + t)
            moved = rotate_conformer(c, q, rng.normal(0.0, 5.0, size=3))
            _, agg_m, angle_m, dihedral_m = _rgc_identity(moved)
            results["rgc_rigid_motion_invariance"].record(
                max(np.abs(angle_m - angle).max(), np.abs(dihedral_m - dihedral).max()))
            results["vecfeat_equivariance"].record(np.abs(agg_m.values.data - agg.rotated(q).values.data).max())
            results["model_rigid_motion_invariance"].record(
                abs(predict_gap(g, moved, params, model_cfg, Mode.JOINT).item() - base_joint))
            results["mode_2d_coordinate_independence"].record(
                abs(predict_gap(g, moved, params, model_cfg, Mode.TWO_D).item() - base_2d))

            perm = rng.permutation(n)
            c_p = permute_conformer(c, perm)
            _, _, angle_p, dihedral_p = _rgc_identity(c_p)
            results["rgc_permutation_equivariance"].record(
                max(np.abs(angle_p - angle[perm]).max(), np.abs(dihedral_p - dihedral[np.ix_(perm, perm)]).max()))
            results["model_permutation_invariance"].record(
                abs(predict_gap(permute_molgraph(g, perm), c_p, params, model_cfg, Mode.JOINT).item() - base_joint))

            scrambled = rng.integers(0, model_cfg.spd_cap + 1, size=(n, n))
            scrambled = np.triu(scrambled, 1) + np.triu(scrambled, 1).T
            spd = SpdMatrix(scrambled, model_cfg.spd_cap)
            results["mode_3d_spd_independence"].record(
                abs(predict_gap(g, c, params, model_cfg, Mode.THREE_D, spd=spd).item() - base_3d))
        logger.debug("checked %s (%d atoms)", c.mol_id, n)
    return list(results.values())


def register(subparsers):
    parser = subparsers.add_parser("check-equiv", help="symmetry, oracle and mode-contract suite",
                                   description="Run the symmetry and oracle properties over conformer files.")
    parser.add_argument("conformers", nargs="+", type=Path, help="extended XYZ files")
    parser.add_argument("--molecules", type=Path, default=None, help="molecule JSON lines matched by id")
    parser.add_argument("--n-trials", type=int, default=None, help="random rotations/permutations per conformer")
    parser.add_argument("--inject-fault", choices=FAULTS, default=None, help=argparse.SUPPRESS)
    add_common_flags(parser)
    parser.set_defaults(handler=run)


def run(args) -> int:
    cfg = load_config(CheckConfig, args.config, section="check", seed=args.seed, n_trials=args.n_trials)
    if cfg.n_trials < 1:
        raise UsageError(f"--n-trials must be >= 1, got {cfg.n_trials}")
    check_paths(*args.conformers, args.molecules)
    manifest = RunManifest.start("check-equiv", args.config, cfg.seed, [*args.conformers, *([args.molecules] if args.molecules else [])])
    conformers = [c for path in args.conformers for c in read_xyz(path)]
    graphs = {g.mol_id: g for g in read_molecules(args.molecules)} if args.molecules else {}

    results = run_checks(conformers, graphs, cfg.n_trials, cfg.seed, cfg.model, args.inject_fault)
    rows = [(r.name, r.n_cases, r.max_deviation, r.tolerance, "pass" if r.passed else "FAIL") for r in results]
    target = out_dir(args, "check_equiv")
    write_csv(target / REPORT_NAME, ("property", "n_cases", "max_deviation", "tolerance", "status"), rows)
    manifest.finish(target, [target / REPORT_NAME])
    print_table(("property", "cases", "max_dev", "tol", "status"),
                [(n, k, f"{d:.3e}", f"{t:.0e}", s) for n, k, d, t, s in rows])

    failed = [r.name for r in results if not r.passed]
    if failed:
        raise PropertyFailure(f"failed properties: {', '.join(failed)}")
    return 0
