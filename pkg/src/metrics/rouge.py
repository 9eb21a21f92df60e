"""
ROUGE-L: longest-common-subsequence F-measure, max over references.
"""

from __future__ import annotations

from typing import List, Sequence

from src.models.evaluation import EvalPair
from src.utils.exceptions import UsageError

DEFAULT_BETA = 1.2


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        row = [0]
        for j, y in enumerate(b, start=1):
            row.append(prev[j - 1] + 1 if x == y else max(prev[j], row[j - 1]))
        prev = row
    return prev[-1]


def rouge_l_sentence(candidate: Sequence[str], references: Sequence[Sequence[str]], beta: float = DEFAULT_BETA) -> float:
    best = 0.0
    for ref in references:
        lcs = lcs_length(candidate, ref)
        if lcs == 0:
            continue
        precision = lcs / len(candidate)
        recall = lcs / len(ref)
        score = (1 + beta ** 2) * precision * recall / (recall + beta ** 2 * precision)
        best = max(best, score)
    return best


def rouge_l_scores(pairs: Sequence[EvalPair], beta: float = DEFAULT_BETA) -> List[float]:
    return [rouge_l_sentence(p.candidate, p.references, beta) for p in pairs]


def rouge_l(pairs: Sequence[EvalPair], beta: float = DEFAULT_BETA) -> float:
    if not pairs:
        raise UsageError("ROUGE-L needs at least one pair")
    scores = rouge_l_scores(pairs, beta)
    return sum(scores) / len(scores)
