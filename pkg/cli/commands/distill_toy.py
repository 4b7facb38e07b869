# cli/commands/distill_toy.py
import logging
from pathlib import Path

from cli.common import add_common_flags, check_paths, out_dir, threads
from core.config import load_config
from core.errors import UsageError
from distill.corpus import load_pairs, synthetic_pairs
from distill.runner import distill_run
from models.config import DistillConfig
from models.visnet import init_visnet
from storage.checkpoints import load_checkpoint, save_checkpoint
from storage.files import write_csv
from storage.manifest import RunManifest

logger = logging.getLogger(__name__)


def register(subparsers):
    parser = subparsers.add_parser("distill-toy", help="align a student on generated conformers to a frozen teacher",
                                   description="Conformer-modality distillation with InfoNCE or L1 embedding loss.")
    parser.add_argument("--teacher", type=Path, default=None,
                        help="teacher checkpoint (default: a seeded, untrained teacher saved next to the outputs)")
    parser.add_argument("--molecules", type=Path, default=None, help="molecule JSON lines (with --conformers)")
    parser.add_argument("--conformers", type=Path, default=None,
                        help="XYZ with optimized and generated frames per id (default: synthetic corpus)")
    parser.add_argument("--loss-kind", choices=["infonce", "l1"], default=None)
    parser.add_argument("--epochs", type=int, default=None)
    add_common_flags(parser)
    parser.set_defaults(handler=run)


def run(args) -> int:
    cfg = load_config(DistillConfig, args.config, section="distill", seed=args.seed, loss_kind=args.loss_kind,
                      total_epochs=args.epochs)
    if (args.molecules is None) != (args.conformers is None):
        raise UsageError("--molecules and --conformers go together")
    check_paths(args.teacher, args.molecules, args.conformers)
    inputs = [p for p in (args.teacher, args.molecules, args.conformers) if p is not None]
    manifest = RunManifest.start("distill-toy", args.config, cfg.seed, inputs)

    if args.molecules is not None:
        pairs = load_pairs(args.molecules, args.conformers)
    else:
        pairs = synthetic_pairs(cfg.n_molecules, cfg.noise_sigma, cfg.seed)
    target = out_dir(args, "distill_toy")
    outputs = [target / "trace.csv", target / "student.json"]
    if args.teacher is not None:
        teacher, _, _ = load_checkpoint(args.teacher)
    else:
        teacher = init_visnet(cfg.teacher, seed=cfg.seed)
        save_checkpoint(target / "teacher.json", teacher, {"visnet": cfg.teacher.model_dump(mode="json")}, kind="visnet")
        outputs.append(target / "teacher.json")

    result = distill_run(pairs, cfg, teacher, threads=threads(args))
    write_csv(outputs[0], ("epoch", "loss", "mean_cosine", "lr"),
              [(r.epoch, r.loss, r.mean_cosine, r.lr) for r in result.trace])
    save_checkpoint(outputs[1], result.student_params, {"distill": cfg.model_dump(mode="json"),
                                                        "teacher_hash": result.teacher_hash}, kind="visnet")
    manifest.finish(target, outputs)
    first, last = result.trace[0], result.trace[-1]
    print(f"{len(pairs)} pairs, {cfg.loss_kind.value}: cosine {first.mean_cosine:.6f} -> {last.mean_cosine:.6f}, "
          f"loss {first.loss:.6f} -> {last.loss:.6f}")
    return 0
