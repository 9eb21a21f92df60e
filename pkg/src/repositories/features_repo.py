"""
Reader/writer for ``.vcf`` feature files.

Layout (little-endian):
    0-3   magic b"VCF1"
    4-7   n_frames  u32
    8-11  dim       u32
    12-15 reserved, zero
    16-   n_frames * dim float32, row-major

Values are stored at 32-bit precision and upcast to float64 on load.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Dict, Union

import numpy as np

from src.models.dataset import FeatureMatrix
from src.utils.exceptions import FormatError, UsageError
from src.utils.logger import logger

MAGIC = b"VCF1"
HEADER = struct.Struct("<4sIII")
PathLike = Union[str, Path]


def encode_features(m: FeatureMatrix) -> bytes:
    payload = np.ascontiguousarray(m.values, dtype="<f4")
    if not np.all(np.isfinite(payload)):
        raise UsageError("feature values overflow 32-bit floats")
    return HEADER.pack(MAGIC, m.n_frames, m.dim, 0) + payload.tobytes()


def decode_features(blob: bytes, path: str = "<bytes>") -> FeatureMatrix:
    if len(blob) < HEADER.size:
        raise FormatError("truncated header", path=path, byte_offset=len(blob))
    magic, n_frames, dim, reserved = HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}", path=path, byte_offset=0)
    if n_frames == 0:
        raise FormatError("n_frames must be positive", path=path, byte_offset=4)
    if dim == 0:
        raise FormatError("dim must be positive", path=path, byte_offset=8)
    if reserved != 0:
        raise FormatError("reserved header field is not zero", path=path, byte_offset=12)
    expected = HEADER.size + n_frames * dim * 4
    if len(blob) < expected:
        raise FormatError(f"truncated payload: declared {expected} bytes, found {len(blob)}",
                          path=path, byte_offset=len(blob))
    if len(blob) > expected:
        raise FormatError(f"trailing bytes after declared payload of {expected} bytes",
                          path=path, byte_offset=expected)
    values = np.frombuffer(blob, dtype="<f4", count=n_frames * dim, offset=HEADER.size)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise FormatError("non-finite feature value", path=path, byte_offset=HEADER.size + int(bad[0]) * 4)
    return FeatureMatrix(values=values.reshape(n_frames, dim).astype(np.float64))


def write_features(path: PathLike, m: FeatureMatrix) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_features(m))


def read_features(path: PathLike) -> FeatureMatrix:
    path = Path(path)
    if not path.is_file():
        raise FormatError("feature file not found", path=str(path))
    return decode_features(path.read_bytes(), str(path))


class FeatureRepository:
    """Loads feature files once and serves them from memory afterwards."""

    def __init__(self, root: PathLike = "."):
        self._root = Path(root)
        self._cache: Dict[Path, FeatureMatrix] = {}

    def resolve(self, feature_path: str) -> Path:
        p = Path(feature_path)
        return p if p.is_absolute() else self._root / p

    def load(self, feature_path: str) -> FeatureMatrix:
        path = self.resolve(feature_path)
        if path not in self._cache:
            self._cache[path] = read_features(path)
            logger.debug("Loaded feature file", {"path": str(path), "shape": self._cache[path].values.shape})
        return self._cache[path]

    def __len__(self) -> int:
        return len(self._cache)
