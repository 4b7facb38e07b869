# cli/commands/oracle_diff.py
import logging

import numpy as np

from cli.common import add_common_flags, out_dir, print_table
from core.config import load_config
from core.errors import PropertyFailure, UsageError
from geometry.benchmark import benchmark_conformer, fast_features
from geometry.geom import direction_field
from geometry.rgc import ANGLE_TOLERANCE, DIHEDRAL_TOLERANCE, angle_oracle, dihedral_oracle
from models.config import OracleDiffConfig
from storage.files import write_csv
from storage.manifest import RunManifest

logger = logging.getLogger(__name__)

REPORT_NAME = "oracle_diff.csv"
MAX_ORACLE_ATOMS = 16


def oracle_diffs(sizes: list[int], seed: int) -> list[tuple[int, float, float]]:
    """(N, max |angle - oracle|, max |dihedral - oracle|) per size, one seeded conformer each."""
    rows = []
    for n in sizes:
        c = benchmark_conformer(n, seed + n)
        df = direction_field(c)
        angle, dihedral = fast_features(c)
        rows.append((n, float(np.abs(angle.data[:, 0] - angle_oracle(df)).max()),
                     float(np.abs(dihedral.data[:, :, 0] - dihedral_oracle(df)).max())))
    return rows


def register(subparsers):
    parser = subparsers.add_parser("oracle-diff", help="RGC fast path against the brute-force oracles",
                                   description="Compare RGC angle/dihedral features with the O(N^3)/O(N^4) oracles.")
    parser.add_argument("--sizes", type=int, nargs="+", default=None,
                        help=f"atom counts, each <= {MAX_ORACLE_ATOMS} (default 4 8 12)")
    add_common_flags(parser)
    parser.set_defaults(handler=run)


def run(args) -> int:
    cfg = load_config(OracleDiffConfig, args.config, section="oracle_diff", seed=args.seed, sizes=args.sizes)
    too_big = [n for n in cfg.sizes if n > MAX_ORACLE_ATOMS]
    if too_big:
        raise UsageError(f"sizes {too_big} exceed {MAX_ORACLE_ATOMS}: the dihedral oracle is O(N^4); "
                         "use `bench` for larger sizes")
    if any(n < 1 for n in cfg.sizes):
        raise UsageError("sizes must be >= 1")
    manifest = RunManifest.start("oracle-diff", args.config, cfg.seed)

    rows = [(n, a, d, "pass" if a <= ANGLE_TOLERANCE and d <= DIHEDRAL_TOLERANCE else "FAIL")
            for n, a, d in oracle_diffs(cfg.sizes, cfg.seed)]
    target = out_dir(args, "oracle_diff")
    write_csv(target / REPORT_NAME, ("n_atoms", "angle_max_diff", "dihedral_max_diff", "status"), rows)
    manifest.finish(target, [target / REPORT_NAME])
    print_table(("N", "angle", "dihedral", "status"), [(n, f"{a:.3e}", f"{d:.3e}", s) for n, a, d, s in rows])

    failed = [str(r[0]) for r in rows if r[3] != "pass"]
    if failed:
        raise PropertyFailure(f"oracle mismatch above tolerance for N = {', '.join(failed)}")
    return 0
