# ensemble/tables.py
# CSV inputs: long-format member predictions and the fallback lookup table.
from collections import defaultdict
from pathlib import Path

from pydantic import ValidationError

from core.errors import InputFileError
from ensemble.aggregate import PredictionSet
from storage.files import parse_float, read_csv


def read_predictions(path: str | Path) -> dict[str, PredictionSet]:
    """`sample_id,member_id,value_ev` rows grouped per sample, member order as in the file."""
    values: dict[str, list[float]] = defaultdict(list)
    members: dict[str, list[str]] = defaultdict(list)
    for row_no, row in enumerate(read_csv(path, ("sample_id", "member_id", "value_ev")), start=2):
        sid = row["sample_id"].strip()
        if row["member_id"] in members[sid]:
            raise InputFileError(path, f"row {row_no}: duplicate member {row['member_id']!r} for {sid}")
        members[sid].append(row["member_id"])
        values[sid].append(parse_float(path, row_no, "value_ev", row["value_ev"]))
    try:
        return {sid: PredictionSet(sample_id=sid, values=values[sid], member_ids=members[sid]) for sid in values}
    except ValidationError as e:
        raise InputFileError(path, str(e.errors()[0]["msg"]))


def read_fallback_table(path: str | Path) -> dict[str, float]:
    table = {}
    for row_no, row in enumerate(read_csv(path, ("sample_id", "value_ev")), start=2):
        table[row["sample_id"].strip()] = parse_float(path, row_no, "value_ev", row["value_ev"])
    return table
