# cli/common.py
# Flags shared by every command and the small helpers commands build on.
import argparse
import logging
from pathlib import Path

from core.config import settings
from core.errors import InputFileError

logger = logging.getLogger(__name__)


def add_common_flags(parser: argparse.ArgumentParser, default_threads: int | None = None):
    parser.add_argument("--config", type=Path, default=None, help="TOML run configuration")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed; wins over RGC_ATTN_SEED and the config file")
    parser.add_argument("--out-dir", type=Path, default=None,
                        help="output directory (default: $RGC_ATTN_OUT_DIR/<command>)")
    parser.add_argument("--threads", type=int, default=default_threads,
                        help="worker threads for independent molecules (default: $RGC_ATTN_THREADS)")
    parser.add_argument("--log-level", default=None, choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help="log level (default: $RGC_ATTN_LOG_LEVEL)")


def out_dir(args, command: str) -> Path:
    path = args.out_dir if args.out_dir is not None else Path(settings.RGC_ATTN_OUT_DIR) / command
    path.mkdir(parents=True, exist_ok=True)
    return path


def threads(args) -> int:
    return max(1, args.threads if args.threads is not None else settings.RGC_ATTN_THREADS)


def check_paths(*paths):
    """Fail fast on missing inputs before any computation."""
    for p in paths:
        if p is not None and not Path(p).is_file():
            raise InputFileError(p, "file not found")


def print_table(header, rows):
    widths = [max(len(str(h)), *(len(str(r[i])) for r in rows)) if rows else len(str(h)) for i, h in enumerate(header)]
    print("  ".join(str(h).ljust(w) for h, w in zip(header, widths)))
    for r in rows:
        print("  ".join(str(v).ljust(w) for v, w in zip(r, widths)))
