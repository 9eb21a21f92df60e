"""
Greedy and beam-search caption decoding.

Both searches score tokens with the full-vocabulary log-softmax and never
emit <pad> or <start>. Argmax ties resolve to the lowest token id; beam
ties resolve to the lexicographically smallest token sequence.
"""

from __future__ import annotations

from typing import List, Optional, Tuple

import numpy as np

from src.autodiff.ops import log_softmax_values
from src.models.evaluation import Hypothesis
from src.models.model_config import ModelConfig
from src.nn.cells import CellState
from src.nn.seq2seq import BoundModel, ModelParams, decode_step, encode
from src.text.vocab import END_ID, PAD_ID, START_ID
from src.utils.exceptions import UsageError

BLOCKED_IDS = (PAD_ID, START_ID)


def _bound(params: ModelParams, config: Optional[ModelConfig]) -> Tuple[BoundModel, ModelConfig]:
    config = config or params.config
    if config != params.config:
        raise UsageError("decoding config differs from the parameters' config")
    return params.bind(), config


def step_log_probs(logits: np.ndarray) -> np.ndarray:
    """Log-softmax with the blocked ids pushed to -inf."""
    lp = log_softmax_values(logits)
    lp[list(BLOCKED_IDS)] = -np.inf
    return lp


def greedy_decode(features, params: ModelParams, config: Optional[ModelConfig] = None) -> List[int]:
    """Argmax decoding until <end> or ``t_dec_max`` steps; ids exclude <start>/<end>."""
    model, config = _bound(params, config)
    encoder_states, state = encode(features, model, config)
    tokens: List[int] = []
    prev = START_ID
    for _ in range(config.t_dec_max):
        logits, state = decode_step(prev, state, encoder_states, model, config)
        token = int(np.argmax(step_log_probs(logits.data)))
        if token == END_ID:
            break
        tokens.append(token)
        prev = token
    return tokens


def beam_decode(features, params: ModelParams, config: Optional[ModelConfig] = None,
                beam_width: int = 5, length_norm: bool = True) -> Hypothesis:
    """Best completed hypothesis, else the best unfinished one at ``t_dec_max``."""
    if beam_width < 1:
        raise UsageError(f"beam_width must be >= 1, got {beam_width}")
    model, config = _bound(params, config)
    encoder_states, state = encode(features, model, config)

    live: List[Tuple[Hypothesis, CellState]] = [(Hypothesis(), state)]
    completed: List[Hypothesis] = []

    def rank(log_prob: float, steps: int, tokens: Tuple[int, ...]):
        score = log_prob / steps if length_norm and steps else log_prob
        return (-score, tokens)

    for _ in range(config.t_dec_max):
        candidates = []
        for hyp, hyp_state in live:
            prev = hyp.tokens[-1] if hyp.tokens else START_ID
            logits, next_state = decode_step(prev, hyp_state, encoder_states, model, config)
            lp = step_log_probs(logits.data)
            for token in np.flatnonzero(np.isfinite(lp)):
                token = int(token)
                total = hyp.log_prob + float(lp[token])
                path = (*hyp.tokens, token)
                candidates.append((rank(total, len(path), path), hyp, token, float(lp[token]), next_state))
        candidates.sort(key=lambda c: c[0])

        live = []
        for _, hyp, token, token_lp, next_state in candidates[:beam_width]:
            extended = hyp.extend(token, token_lp, end=token == END_ID)
            if extended.complete:
                completed.append(extended)
            else:
                live.append((extended, next_state))
        if not live:
            break

    pool = completed or [hyp for hyp, _ in live]
    return min(pool, key=lambda h: (-h.score(length_norm), tuple(h.tokens)))
