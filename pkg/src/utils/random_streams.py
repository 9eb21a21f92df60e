"""
Named random streams derived from a single run seed.

Every consumer of randomness (parameter init, shuffling, synthetic data)
asks for its own stream, so adding draws in one place never shifts another.
"""

from __future__ import annotations

import zlib

import numpy as np

INIT = "init"
SHUFFLE = "shuffle"
SPLIT = "split"
SYNTH = "synth"


def stream_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def derive_rng(seed: int, stream: str) -> np.random.Generator:
    """Independent generator for ``stream`` under run ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), stream_key(stream)]))
