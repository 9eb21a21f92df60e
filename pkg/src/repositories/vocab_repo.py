"""
Vocabulary file access: UTF-8, one ``token<TAB>id`` line per entry, sorted by id.
"""

from __future__ import annotations

from pathlib import Path
from typing import List, Union

from pydantic import ValidationError

from src.text.vocab import Vocab
from src.utils.exceptions import DataError
from src.utils.text_files import read_text_lines

PathLike = Union[str, Path]


def save_vocab(path: PathLike, vocab: Vocab) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(vocab.to_lines()) + "\n", encoding="utf-8")


def load_vocab(path: PathLike) -> Vocab:
    path = Path(path)
    if not path.is_file():
        raise DataError("vocabulary file not found", path=str(path))
    tokens: List[str] = []
    for line_no, line in enumerate(read_text_lines(path), start=1):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError("expected 'token<TAB>id'", path=str(path), line=line_no)
        token, raw_id = parts
        try:
            token_id = int(raw_id)
        except ValueError:
            raise DataError(f"id '{raw_id}' is not an integer", path=str(path), line=line_no)
        if token_id != len(tokens):
            raise DataError(f"ids must be contiguous from 0, expected {len(tokens)} got {token_id}",
                            path=str(path), line=line_no)
        tokens.append(token)
    try:
        return Vocab(tokens=tuple(tokens))
    except ValidationError as e:
        raise DataError(f"invalid vocabulary: {e.errors()[0]['msg']}", path=str(path))
