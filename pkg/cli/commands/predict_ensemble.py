# cli/commands/predict_ensemble.py
import logging
from pathlib import Path

from cli.common import add_common_flags, check_paths, out_dir, print_table
from core.config import load_config
from core.errors import UsageError
from ensemble.routing import LookupTableFallback, RoutingRule, route_with_source
from ensemble.tables import read_fallback_table, read_predictions
from models.config import EnsembleConfig
from molecules.formats import read_molecules
from storage.files import write_csv
from storage.manifest import RunManifest

logger = logging.getLogger(__name__)

REPORT_NAME = "predictions.csv"


def register(subparsers):
    parser = subparsers.add_parser("predict-ensemble", help="trimmed middle mean with small-molecule fallback",
                                   description="Aggregate member predictions per sample; molecules below the atom "
                                               "threshold take the fallback table value instead.")
    parser.add_argument("--predictions", type=Path, required=True, help="CSV sample_id,member_id,value_ev")
    parser.add_argument("--molecules", type=Path, required=True, help="molecule JSON lines (atom counts)")
    parser.add_argument("--fallback", type=Path, default=None, help="CSV sample_id,value_ev")
    parser.add_argument("--k", type=int, default=None, help="middle values averaged (default 10)")
    parser.add_argument("--min-atoms", type=int, default=None,
                        help="molecules with fewer atoms go to the fallback (default 4)")
    add_common_flags(parser)
    parser.set_defaults(handler=run)


def run(args) -> int:
    if args.seed is not None:
        raise UsageError("predict-ensemble is deterministic and takes no --seed")
    cfg = load_config(EnsembleConfig, args.config, section="ensemble", k=args.k, min_atoms=args.min_atoms)
    check_paths(args.predictions, args.molecules, args.fallback)
    manifest = RunManifest.start("predict-ensemble", args.config, None,
                                 [p for p in (args.predictions, args.molecules, args.fallback) if p])
    graphs = read_molecules(args.molecules)
    preds = read_predictions(args.predictions)
    table = read_fallback_table(args.fallback) if args.fallback else {}
    rule = RoutingRule(LookupTableFallback(table), cfg.min_atoms)

    rows = []
    for g in graphs:
        value, source = route_with_source(g, preds.get(g.mol_id), rule, cfg.k)
        rows.append((g.mol_id, value, source.value))
    unknown = sorted(set(preds) - {g.mol_id for g in graphs})
    if unknown:
        logger.warning("Predictions for %d samples without a molecule record skipped: %s", len(unknown), unknown)

    target = out_dir(args, "predict_ensemble")
    write_csv(target / REPORT_NAME, ("sample_id", "gap_ev", "source"), rows)
    manifest.finish(target, [target / REPORT_NAME])
    print_table(("sample_id", "gap_ev", "source"), [(s, repr(v), src) for s, v, src in rows])
    return 0
