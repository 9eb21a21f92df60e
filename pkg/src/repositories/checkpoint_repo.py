"""
Checkpoint file access.

Layout (little-endian):
    b"VCKP", version u32, header length u32, UTF-8 JSON header
    then records until EOF: name length u32, name bytes, rank u32,
    dims u32 * rank, float64 payload (row-major)

Optimizer moments are stored as records named ``adam.m/<param>`` and
``adam.v/<param>``.
"""

from __future__ import annotations

import math
import struct
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from src.models.model_config import ModelConfig
from src.models.training import CHECKPOINT_VERSION, AdamState, Checkpoint
from src.nn.seq2seq import expected_shapes
from src.utils.exceptions import FormatError
from src.utils.logger import logger

MAGIC = b"VCKP"
U32 = struct.Struct("<I")
PathLike = Union[str, Path]
MOMENT_PREFIXES = ("adam.m/", "adam.v/")


class CheckpointHeader(BaseModel):
    config: ModelConfig
    vocab_hash: str = ""
    optimizer_step: int = 0


def _records(ckpt: Checkpoint) -> List[Tuple[str, np.ndarray]]:
    names = list(expected_shapes(ckpt.config))
    records = [(n, ckpt.params[n]) for n in names]
    for prefix, moments in zip(MOMENT_PREFIXES, (ckpt.optimizer.m, ckpt.optimizer.v)):
        records.extend((prefix + n, moments[n]) for n in names if n in moments)
    return records


def encode_checkpoint(ckpt: Checkpoint) -> bytes:
    header = CheckpointHeader(config=ckpt.config, vocab_hash=ckpt.vocab_hash,
                              optimizer_step=ckpt.optimizer.step).model_dump_json().encode("utf-8")
    chunks = [MAGIC, U32.pack(ckpt.version), U32.pack(len(header)), header]
    for name, array in _records(ckpt):
        raw_name = name.encode("utf-8")
        array = np.ascontiguousarray(array, dtype="<f8")
        chunks.append(U32.pack(len(raw_name)))
        chunks.append(raw_name)
        chunks.append(U32.pack(array.ndim))
        chunks.extend(U32.pack(d) for d in array.shape)
        chunks.append(array.tobytes())
    return b"".join(chunks)


class _Reader:
    def __init__(self, blob: bytes, path: str):
        self.blob = blob
        self.path = path
        self.offset = 0

    def take(self, n: int, what: str) -> bytes:
        if n < 0 or self.offset + n > len(self.blob):
            raise FormatError(f"truncated {what}", path=self.path, byte_offset=len(self.blob))
        chunk = self.blob[self.offset:self.offset + n]
        self.offset += n
        return chunk

    def u32(self, what: str) -> int:
        return U32.unpack(self.take(4, what))[0]

    @property
    def done(self) -> bool:
        return self.offset >= len(self.blob)


def decode_checkpoint(blob: bytes, path: str = "<bytes>") -> Checkpoint:
    reader = _Reader(blob, path)
    if reader.take(4, "magic") != MAGIC:
        raise FormatError("bad magic, expected b'VCKP'", path=path, byte_offset=0)
    version = reader.u32("version")
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"unsupported checkpoint version {version}, expected {CHECKPOINT_VERSION}",
                          path=path, byte_offset=4)
    header_len = reader.u32("header length")
    header_at = reader.offset
    try:
        header = CheckpointHeader.model_validate_json(reader.take(header_len, "header").decode("utf-8"))
    except (ValidationError, UnicodeDecodeError) as e:
        raise FormatError(f"unreadable header: {e}", path=path, byte_offset=header_at)

    arrays: Dict[str, np.ndarray] = {}
    while not reader.done:
        record_at = reader.offset
        try:
            name = reader.take(reader.u32("record name length"), "record name").decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError("record name is not valid UTF-8", path=path, byte_offset=record_at + 4)
        rank = reader.u32("record rank")
        dims = tuple(reader.u32("record dims") for _ in range(rank))
        count = math.prod(dims)
        payload = reader.take(count * 8, f"payload of '{name}'")
        if name in arrays:
            raise FormatError(f"duplicate record '{name}'", path=path, byte_offset=record_at)
        arrays[name] = np.frombuffer(payload, dtype="<f8").reshape(dims).astype(np.float64)

    shapes = expected_shapes(header.config)
    params: Dict[str, np.ndarray] = {}
    moments: Tuple[Dict[str, np.ndarray], Dict[str, np.ndarray]] = ({}, {})
    for name, array in arrays.items():
        target, base = params, name
        for slot, prefix in enumerate(MOMENT_PREFIXES):
            if name.startswith(prefix):
                target, base = moments[slot], name[len(prefix):]
        if base not in shapes:
            raise FormatError(f"record '{name}' is not a parameter of the embedded config", path=path)
        if array.shape != shapes[base]:
            raise FormatError(f"record '{name}' has shape {array.shape}, config expects {shapes[base]}", path=path)
        target[base] = array
    missing = [n for n in shapes if n not in params]
    if missing:
        raise FormatError(f"missing parameter records: {', '.join(missing)}", path=path)

    try:
        return Checkpoint(
            version=version,
            config=header.config,
            params=params,
            optimizer=AdamState(step=header.optimizer_step, m=moments[0], v=moments[1]),
            vocab_hash=header.vocab_hash,
        )
    except ValidationError as e:
        raise FormatError(f"invalid checkpoint contents: {e.errors()[0]['msg']}", path=path)


def save_checkpoint(path: PathLike, ckpt: Checkpoint) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    blob = encode_checkpoint(ckpt)
    path.write_bytes(blob)
    logger.info("Saved checkpoint", {"path": str(path), "bytes": len(blob), "variant": ckpt.config.variant})


def load_checkpoint(path: PathLike) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise FormatError("checkpoint not found", path=str(path))
    return decode_checkpoint(path.read_bytes(), str(path))
