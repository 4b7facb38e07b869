# cli/app.py
# Command router: one module per command, each registering its own subparser.
import argparse
import logging

from core import __version__
from core.errors import RgcAttnError
from cli.commands import bench, check_equiv, distill_toy, oracle_diff, predict_ensemble, train_toy

logger = logging.getLogger(__name__)

COMMANDS = (check_equiv, oracle_diff, bench, train_toy, distill_toy, predict_ensemble)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rgc-attn",
        description="Verification and benchmark workflows for runtime geometry calculation, "
                    "Transformer-M-ViSNet attention biases, conformer distillation and ensembling.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def dispatch(args) -> int:
    """Run the selected command; library errors become exit codes (1 failure, 2 usage, 3 I/O)."""
    try:
        return args.handler(args)
    except RgcAttnError as e:
        logger.error("%s: %s", type(e).__name__, e.detail)
        return e.exit_code
