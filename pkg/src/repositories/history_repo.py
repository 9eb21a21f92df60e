"""
Epoch history TSV: ``epoch<TAB>train_loss<TAB>train_acc<TAB>val_loss<TAB>val_acc``.
"""

from __future__ import annotations

from pathlib import Path
from typing import List, Sequence, Union

from src.models.training import EpochRecord
from src.utils.exceptions import DataError
from src.utils.text_files import read_text_lines

HISTORY_HEADER = "epoch\ttrain_loss\ttrain_acc\tval_loss\tval_acc"
PathLike = Union[str, Path]


def format_history(records: Sequence[EpochRecord]) -> str:
    return "\n".join([HISTORY_HEADER, *(r.to_tsv() for r in records)]) + "\n"


def write_history(path: PathLike, records: Sequence[EpochRecord]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_history(records), encoding="utf-8")


def read_history(path: PathLike) -> List[EpochRecord]:
    path = Path(path)
    if not path.is_file():
        raise DataError("history file not found", path=str(path))
    records: List[EpochRecord] = []
    for line_no, line in enumerate(read_text_lines(path), start=1):
        if not line.strip() or line == HISTORY_HEADER:
            continue
        parts = line.split("\t")
        if len(parts) != 5:
            raise DataError("expected 5 tab-separated columns", path=str(path), line=line_no)
        try:
            records.append(EpochRecord(
                epoch=int(parts[0]), train_loss=float(parts[1]), train_acc=float(parts[2]),
                val_loss=float(parts[3]), val_acc=float(parts[4]),
            ))
        except ValueError as e:
            raise DataError(f"malformed history row: {e}", path=str(path), line=line_no)
    return records
