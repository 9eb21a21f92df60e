"""
Devanagari-aware caption tokenizer.

Text is NFC-normalised first, since Devanagari has several code point
spellings of the same visible word, then split on whitespace with danda,
double danda and ASCII sentence punctuation detached as their own tokens.
"""

from __future__ import annotations

import re
import unicodedata
from typing import List

DANDA = "।"
DOUBLE_DANDA = "॥"
DETACHED_PUNCTUATION = DANDA + DOUBLE_DANDA + ".,!?;:"

_PUNCT_SPLIT = re.compile("([" + re.escape(DETACHED_PUNCTUATION) + "])")


def normalize(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def tokenize(text: str) -> List[str]:
    tokens: List[str] = []
    for chunk in normalize(text).split():
        tokens.extend(piece for piece in _PUNCT_SPLIT.split(chunk) if piece)
    return tokens
