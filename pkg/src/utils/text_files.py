# UTF-8 text file reading with line-numbered decode errors

from __future__ import annotations

from pathlib import Path
from typing import List, Union

from src.utils.exceptions import DataError

PathLike = Union[str, Path]


def read_text_lines(path: PathLike) -> List[str]:
    """Lines of a UTF-8 file without their ``\\n``/``\\r\\n`` terminators.

    Invalid UTF-8 raises DataError naming the line that holds the bad byte.
    """
    path = Path(path)
    blob = path.read_bytes()
    try:
        text = blob.decode("utf-8")
    except UnicodeDecodeError as e:
        line_no = blob.count(b"\n", 0, e.start) + 1
        raise DataError(f"invalid UTF-8 byte 0x{blob[e.start]:02x}", path=str(path), line=line_no,
                        details={"byte_offset": e.start})
    lines = [raw[:-1] if raw.endswith("\r") else raw for raw in text.split("\n")]
    if lines and lines[-1] == "":
        lines.pop()
    return lines
