# cli/commands/bench.py
import logging

from cli.common import add_common_flags, out_dir, print_table
from core.config import load_config
from core.errors import ContractError, PropertyFailure, UsageError
from geometry.benchmark import scaling_benchmark
from models.config import BenchConfig
from storage.files import write_csv
from storage.manifest import RunManifest

logger = logging.getLogger(__name__)

REPORT_NAME = "bench.csv"


def register(subparsers):
    parser = subparsers.add_parser("bench", help="RGC scaling benchmark",
                                   description="Median wall times of the RGC fast path and both oracles, "
                                               "with fitted log-log slopes.")
    parser.add_argument("--sizes", type=int, nargs="+", default=None, help="ascending atom counts (default 16 32 64 128)")
    parser.add_argument("--repeats", type=int, default=None, help="timed repeats per size (median reported)")
    parser.add_argument("--min-slope-gap", type=float, default=None,
                        help="fail unless slope(dihedral oracle) - slope(fast) reaches this")
    add_common_flags(parser, default_threads=1)
    parser.set_defaults(handler=run)


def run(args) -> int:
    cfg = load_config(BenchConfig, args.config, section="bench", seed=args.seed, sizes=args.sizes,
                      repeats=args.repeats, min_slope_gap=args.min_slope_gap)
    manifest = RunManifest.start("bench", args.config, cfg.seed)
    try:
        result = scaling_benchmark(cfg.sizes, cfg.repeats, cfg.seed)
    except ContractError as e:
        raise UsageError(e.detail)

    target = out_dir(args, "bench")
    slopes = " ".join(f"{name}={value:.3f}" for name, value in result.slopes.items())
    write_csv(target / REPORT_NAME, ("N", "fast_ns", "angle_oracle_ns", "dihedral_oracle_ns"),
              [(r.n_atoms, r.fast_ns, r.angle_oracle_ns, r.dihedral_oracle_ns) for r in result.rows],
              comments=[f"slopes {slopes} gap={result.slope_gap:.3f}"])
    manifest.finish(target, [target / REPORT_NAME])
    print_table(("N", "fast_ns", "angle_ns", "dihedral_ns", "agrees"),
                [(r.n_atoms, r.fast_ns, r.angle_oracle_ns, r.dihedral_oracle_ns, r.agrees) for r in result.rows])
    print(f"slopes: {slopes}  gap: {result.slope_gap:.3f}")

    disagreeing = [r.n_atoms for r in result.rows if not r.agrees]
    if disagreeing:
        raise PropertyFailure(f"fast path and oracles disagree at N = {disagreeing}")
    if cfg.min_slope_gap is not None and result.slope_gap < cfg.min_slope_gap:
        raise PropertyFailure(f"slope gap {result.slope_gap:.3f} below {cfg.min_slope_gap}")
    return 0
