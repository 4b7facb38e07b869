# storage/manifest.py
import logging
import subprocess
from datetime import datetime, timezone
from pathlib import Path

from pydantic import BaseModel

from core import __version__
from storage.files import save_json

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def describe_version() -> str:
    """`git describe` of the working tree, or the package version outside a checkout."""
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], capture_output=True,
                             text=True, timeout=5, cwd=Path(__file__).resolve().parent)
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class RunManifest(BaseModel):
    command: str
    config_path: str | None = None
    seed: int | None = None
    inputs: list[str] = []
    outputs: list[str] = []
    version: str = ""
    started_at: str = ""
    finished_at: str | None = None

    @classmethod
    def start(cls, command: str, config_path=None, seed=None, inputs=()) -> "RunManifest":
        return cls(command=command, config_path=str(config_path) if config_path else None, seed=seed,
                   inputs=[str(p) for p in inputs], version=describe_version(), started_at=_now())

    def finish(self, out_dir: str | Path, outputs=()) -> Path:
        self.outputs = [str(p) for p in outputs]
        self.finished_at = _now()
        path = Path(out_dir) / MANIFEST_NAME
        save_json(path, self.model_dump())
        logger.info("Wrote run manifest to %s", path)
        return path
