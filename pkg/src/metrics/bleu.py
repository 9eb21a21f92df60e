"""
Corpus-level BLEU with clipped n-gram precision and brevity penalty.

Uniform weights, no smoothing: a zero precision at any order k <= n makes
BLEU-n zero. The reference length of each sentence is the closest
reference length (shorter wins ties).
"""

from __future__ import annotations

import math
from collections import Counter
from typing import List, Sequence, Tuple

from src.models.evaluation import EvalPair
from src.utils.exceptions import UsageError

MAX_ORDER = 4


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def clipped_matches(candidate: Sequence[str], references: Sequence[Sequence[str]], n: int) -> Tuple[int, int]:
    """(clipped matches, candidate n-gram count) at order ``n``."""
    cand = ngrams(candidate, n)
    ceiling: Counter = Counter()
    for ref in references:
        for gram, count in ngrams(ref, n).items():
            ceiling[gram] = max(ceiling[gram], count)
    matched = sum(min(count, ceiling[gram]) for gram, count in cand.items())
    return matched, max(len(candidate) - n + 1, 0)


def closest_ref_length(candidate: Sequence[str], references: Sequence[Sequence[str]]) -> int:
    c = len(candidate)
    return min((len(r) for r in references), key=lambda length: (abs(length - c), length))


def bleu(pairs: Sequence[EvalPair], n_max: int = MAX_ORDER) -> List[float]:
    """[BLEU-1, ..., BLEU-n_max] over the whole corpus."""
    if not 1 <= n_max <= MAX_ORDER:
        raise UsageError(f"n_max must lie in 1..{MAX_ORDER}, got {n_max}")
    if not pairs:
        raise UsageError("BLEU needs at least one candidate")

    matches = [0] * n_max
    totals = [0] * n_max
    c = r = 0
    for pair in pairs:
        c += len(pair.candidate)
        r += closest_ref_length(pair.candidate, pair.references)
        for k in range(n_max):
            m, t = clipped_matches(pair.candidate, pair.references, k + 1)
            matches[k] += m
            totals[k] += t

    if c == 0:
        return [0.0] * n_max
    brevity = 1.0 if c > r else math.exp(1.0 - r / c)

    scores: List[float] = []
    log_sum = 0.0
    zero_seen = False
    for k in range(n_max):
        if matches[k] == 0 or totals[k] == 0:
            zero_seen = True
        else:
            log_sum += math.log(matches[k] / totals[k])
        scores.append(0.0 if zero_seen else brevity * math.exp(log_sum / (k + 1)))
    return scores
