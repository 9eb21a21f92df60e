"""
``key = value`` run-configuration files.

UTF-8, one assignment per line, ``#`` starts a comment line, blank lines
are skipped. Keys may use dashes or underscores.
"""

from __future__ import annotations

from pathlib import Path
from typing import Collection, Dict, List, Tuple, Union

from src.utils.exceptions import DataError, UsageError
from src.utils.text_files import read_text_lines

PathLike = Union[str, Path]


def normalize_key(key: str) -> str:
    return key.strip().replace("-", "_")


def parse_config_lines(lines: List[str], source: str = "<config>") -> List[Tuple[int, str, str]]:
    """(line number, key, raw value) for every assignment."""
    entries: List[Tuple[int, str, str]] = []
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError("expected 'key = value'", path=source, line=line_no)
        key, value = line.split("=", 1)
        key = normalize_key(key)
        if not key:
            raise DataError("empty key", path=source, line=line_no)
        entries.append((line_no, key, value.strip()))
    return entries


def read_config(path: PathLike, allowed: Collection[str]) -> Dict[str, Tuple[int, str]]:
    """Raw values keyed by option name; unknown or repeated keys are usage errors."""
    path = Path(path)
    if not path.is_file():
        raise DataError("config file not found", path=str(path))
    entries = parse_config_lines(read_text_lines(path), str(path))
    values: Dict[str, Tuple[int, str]] = {}
    for line_no, key, value in entries:
        if key not in allowed:
            raise UsageError(f"{path}:{line_no}: unknown config key '{key}'",
                             details={"path": str(path), "line": line_no})
        if key in values:
            raise UsageError(f"{path}:{line_no}: key '{key}' already set on line {values[key][0]}",
                             details={"path": str(path), "line": line_no})
        values[key] = (line_no, value)
    return values
