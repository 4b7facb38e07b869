# cli/commands/train_toy.py
import logging

from cli.common import add_common_flags, out_dir, threads
from core.config import load_config
from core.errors import PropertyFailure
from models.config import ModelConfig, TrainConfig
from molecules.synthetic import synthetic_molecules
from models.train import train_toy
from storage.checkpoints import save_checkpoint
from storage.files import save_json, write_csv
from storage.manifest import RunManifest

logger = logging.getLogger(__name__)


def register(subparsers):
    parser = subparsers.add_parser("train-toy", help="train on synthetic mean-pairwise-distance targets",
                                   description="Toy gap regression with Transformer-M-ViSNet on synthetic molecules.")
    parser.add_argument("--steps", type=int, default=None)
    parser.add_argument("--n-molecules", type=int, default=None)
    parser.add_argument("--max-ratio", type=float, default=None,
                        help="fail unless final L1 / baseline L1 is below this")
    add_common_flags(parser)
    parser.set_defaults(handler=run)


def run(args) -> int:
    model_cfg = load_config(ModelConfig, args.config, section="model", seed=args.seed)
    train_cfg = load_config(TrainConfig, args.config, section="train", seed=args.seed, steps=args.steps,
                            n_molecules=args.n_molecules)
    manifest = RunManifest.start("train-toy", args.config, train_cfg.seed)
    dataset = synthetic_molecules(train_cfg.n_molecules, train_cfg.seed)
    logger.info("Training on %d synthetic molecules for %d steps", len(dataset), train_cfg.steps)

    result = train_toy(dataset, model_cfg, train_cfg, threads(args))
    ratio = result.final_l1 / result.baseline_l1 if result.baseline_l1 > 0 else 0.0

    target = out_dir(args, "train_toy")
    outputs = [target / "loss_curve.csv", target / "summary.json", target / "model.json"]
    write_csv(outputs[0], ("step", "loss"), enumerate(result.loss_curve))
    save_json(outputs[1], {"baseline_l1": result.baseline_l1, "initial_l1": result.initial_l1,
                           "final_l1": result.final_l1, "ratio_to_baseline": ratio})
    save_checkpoint(outputs[2], result.params, {"model": model_cfg.model_dump(mode="json"),
                                                "train": train_cfg.model_dump(mode="json")}, kind="transformer_m")
    manifest.finish(target, outputs)
    print(f"baseline L1 {result.baseline_l1:.5f}  initial L1 {result.initial_l1:.5f}  "
          f"final L1 {result.final_l1:.5f}  ratio {ratio:.4f}")

    if args.max_ratio is not None and ratio >= args.max_ratio:
        raise PropertyFailure(f"final/baseline L1 ratio {ratio:.4f} not below {args.max_ratio}")
    return 0
