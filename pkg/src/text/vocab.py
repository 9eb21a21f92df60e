"""
Caption vocabulary and caption <-> id encoding.

Reserved ids: 0 <pad>, 1 <start>, 2 <end>, 3 <unk>. Regular tokens follow
in descending corpus frequency, ties broken by code point order, so the
same corpus always yields the same ids whatever order it is read in.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from typing import Dict, Iterable, List, Sequence, Tuple

from pydantic import BaseModel, PrivateAttr, field_validator

from src.models.dataset import CaptionRecord
from src.text.tokenizer import tokenize
from src.utils.exceptions import UsageError

PAD, START, END, UNK = "<pad>", "<start>", "<end>", "<unk>"
SPECIAL_TOKENS = (PAD, START, END, UNK)
PAD_ID, START_ID, END_ID, UNK_ID = 0, 1, 2, 3
MIN_VOCAB_SIZE = 5


class Vocab(BaseModel):
    """Immutable bijection between tokens and contiguous ids."""
    tokens: Tuple[str, ...]

    _index: Dict[str, int] = PrivateAttr(default_factory=dict)

    model_config = {"frozen": True}

    @field_validator('tokens')
    @classmethod
    def validate_tokens(cls, v):
        if tuple(v[:len(SPECIAL_TOKENS)]) != SPECIAL_TOKENS:
            raise ValueError(f"vocabulary must start with {SPECIAL_TOKENS}")
        if len(set(v)) != len(v):
            raise ValueError("vocabulary tokens must be unique")
        return tuple(v)

    def model_post_init(self, __context) -> None:
        self._index = {tok: i for i, tok in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def id_of(self, token: str) -> int:
        return self._index.get(token, UNK_ID)

    def token_of(self, token_id: int) -> str:
        if not 0 <= int(token_id) < len(self.tokens):
            raise UsageError(f"token id {token_id} outside vocabulary of size {len(self.tokens)}")
        return self.tokens[int(token_id)]

    def encode(self, tokens: Iterable[str]) -> List[int]:
        return [self.id_of(t) for t in tokens]

    def to_lines(self) -> List[str]:
        return [f"{tok}\t{i}" for i, tok in enumerate(self.tokens)]

    def content_hash(self) -> str:
        payload = "\n".join(self.to_lines()).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()


def build_vocab(corpus: Iterable[CaptionRecord], max_size: int) -> Vocab:
    """Specials plus the ``max_size - 4`` most frequent tokens."""
    if max_size < MIN_VOCAB_SIZE:
        raise UsageError(f"max_size must be >= {MIN_VOCAB_SIZE}, got {max_size}")
    counts: Counter = Counter()
    for record in corpus:
        tokens = record.tokens or tokenize(record.text)
        counts.update(t for t in tokens if t not in SPECIAL_TOKENS)
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    kept = [tok for tok, _ in ranked[:max_size - len(SPECIAL_TOKENS)]]
    return Vocab(tokens=(*SPECIAL_TOKENS, *kept))


def encode_caption(tokens: Sequence[str], vocab: Vocab, t_dec_max: int) -> Tuple[List[int], List[int], List[int]]:
    """Teacher-forcing layout: (decoder input, target, mask), each ``t_dec_max`` long.

    At most ``t_dec_max - 1`` content tokens are kept so the target always
    ends with <end>.
    """
    if t_dec_max < 1:
        raise UsageError(f"t_dec_max must be >= 1, got {t_dec_max}")
    content = vocab.encode(tokens[:t_dec_max - 1])
    decoder_input = [START_ID, *content]
    target = [*content, END_ID]
    pad = [PAD_ID] * (t_dec_max - len(target))
    mask = [1] * len(target) + [0] * len(pad)
    return decoder_input + pad, target + pad, mask


def decode_tokens(ids: Iterable[int], vocab: Vocab) -> str:
    """Space-joined tokens with every reserved id dropped."""
    words = []
    for token_id in ids:
        token = vocab.token_of(token_id)
        if int(token_id) < len(SPECIAL_TOKENS):
            continue
        words.append(token)
    return " ".join(words)
