# molecules/formats.py
# Molecule JSON lines and extended-XYZ conformer files.
import json
import logging
from pathlib import Path

import numpy as np

from core.errors import InputFileError, SchemaError
from geometry.geom import Conformer, Modality
from molecules.elements import ATOMIC_NUMBER, symbol
from molecules.graph2d import MolGraph, dump_molgraph, load_molgraph

logger = logging.getLogger(__name__)


def _read_lines(path: Path) -> list[str]:
    try:
        return path.read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise InputFileError(path, "file not found")
    except (OSError, UnicodeDecodeError) as e:
        raise InputFileError(path, str(e))


def read_molecules(path: str | Path) -> list[MolGraph]:
    """One molecule record per non-blank line. Schema errors name the line."""
    path = Path(path)
    graphs = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise InputFileError(path, f"line {lineno}: {e.msg}")
        try:
            graphs.append(load_molgraph(record))
        except SchemaError as e:
            raise SchemaError(f"{path.name}:{lineno}:{e.field}", e.detail.split(": ", 1)[-1])
    logger.info("Loaded %d molecules from %s", len(graphs), path)
    return graphs


def write_molecules(path: str | Path, graphs: list[MolGraph]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for g in graphs:
            f.write(json.dumps(dump_molgraph(g), separators=(",", ":")) + "\n")


def _parse_comment(comment: str) -> dict[str, str]:
    fields = {}
    for token in comment.split():
        key, sep, value = token.partition("=")
        if sep:
            fields[key] = value
    return fields


def read_xyz(path: str | Path) -> list[Conformer]:
    """Multi-frame extended XYZ: atom count, `id=<id> modality=<...>` comment, `symbol x y z` rows (Å)."""
    path = Path(path)
    lines = _read_lines(path)
    conformers = []
    i = 0
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        try:
            n_atoms = int(lines[i])
        except ValueError:
            raise InputFileError(path, f"line {i + 1}: expected an atom count, got {lines[i]!r}")
        block = lines[i + 2: i + 2 + n_atoms]
        if i + 1 >= len(lines) or len(block) != n_atoms:
            raise InputFileError(path, f"line {i + 1}: frame declares {n_atoms} atoms but the file ends early")
        meta = _parse_comment(lines[i + 1])
        z, positions = [], []
        for offset, row in enumerate(block):
            parts = row.split()
            if len(parts) < 4 or parts[0] not in ATOMIC_NUMBER:
                raise InputFileError(path, f"line {i + 3 + offset}: bad atom row {row!r}")
            z.append(ATOMIC_NUMBER[parts[0]])
            try:
                positions.append([float(v) for v in parts[1:4]])
            except ValueError:
                raise InputFileError(path, f"line {i + 3 + offset}: bad coordinates {row!r}")
        try:
            modality = Modality(meta.get("modality", Modality.OPTIMIZED.value))
        except ValueError:
            raise InputFileError(path, f"line {i + 2}: unknown modality {meta['modality']!r}")
        conformers.append(Conformer(np.array(positions), np.array(z), modality, meta.get("id", f"frame{len(conformers)}")))
        i += n_atoms + 2
    logger.info("Loaded %d conformers from %s", len(conformers), path)
    return conformers


def write_xyz(path: str | Path, conformers: list[Conformer]):
    # repr floats so positions read back bitwise
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for c in conformers:
            f.write(f"{c.n_atoms}\n")
            f.write(f"id={c.mol_id} modality={c.modality.value}\n")
            for z, (x, y, w) in zip(c.atomic_numbers, c.positions):
                f.write(f"{symbol(int(z))} {float(x)!r} {float(y)!r} {float(w)!r}\n")
