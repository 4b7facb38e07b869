# storage/files.py
# JSON and CSV helpers. Reports are written with "\n" line endings and repr
# floats so reruns produce identical bytes.
import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

from core.errors import InputFileError


def save_json(path: str | Path, data, indent: int | None = 2):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        json.dump(data, f, indent=indent, sort_keys=False)
        f.write("\n")


def load_json(path: str | Path):
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise InputFileError(path, "file not found")
    except json.JSONDecodeError as e:
        raise InputFileError(path, f"invalid JSON at line {e.lineno}: {e.msg}")


def format_float(x: float) -> str:
    return repr(float(x))


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence], comments: Sequence[str] = ()):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(v) if isinstance(v, float) else v for v in row])
        for line in comments:
            f.write(f"# {line}\n")


def read_csv(path: str | Path, required: Sequence[str]) -> list[dict[str, str]]:
    """Rows as dicts; lines starting with '#' are skipped. Missing columns are an input error."""
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8", newline="") as f:
            lines = [line for line in f if line.strip() and not line.lstrip().startswith("#")]
    except FileNotFoundError:
        raise InputFileError(path, "file not found")
    except (OSError, UnicodeDecodeError) as e:
        raise InputFileError(path, str(e))
    reader = csv.DictReader(lines)
    missing = [c for c in required if c not in (reader.fieldnames or [])]
    if missing:
        raise InputFileError(path, f"missing columns {missing}")
    return list(reader)


def parse_float(path, row_no: int, column: str, text: str) -> float:
    try:
        return float(text)
    except (TypeError, ValueError):
        raise InputFileError(path, f"row {row_no}: column '{column}' is not a number: {text!r}")
