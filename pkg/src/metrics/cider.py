"""
Plain CIDEr (no Gaussian length penalty).

IDF(g) = log(N / df(g)) where N is the number of videos and df(g) the
number of videos whose references contain g (floored at 1 for n-grams seen
only in candidates). Per order n, a candidate scores the mean cosine
similarity of its TF-IDF vector against each reference's; the video score
is 10 times the mean over n = 1..n_max.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Dict, List, Sequence, Set, Tuple

from src.metrics.bleu import ngrams
from src.models.evaluation import EvalPair
from src.utils.exceptions import UsageError

CIDER_SCALE = 10.0
Gram = Tuple[str, ...]


def document_frequency(pairs: Sequence[EvalPair], n_max: int) -> Counter:
    """Videos whose references contain each n-gram; pairs of one video pool their references."""
    seen: Dict[str, Set[Gram]] = {}
    for pair in pairs:
        grams = seen.setdefault(pair.video_id, set())
        for ref in pair.references:
            for n in range(1, n_max + 1):
                grams.update(ngrams(ref, n))
    df: Counter = Counter()
    for grams in seen.values():
        df.update(grams)
    return df


def _tfidf(tokens: Sequence[str], n: int, idf) -> Dict[Gram, float]:
    return {gram: count * idf(gram) for gram, count in ngrams(tokens, n).items()}


def _cosine(a: Dict[Gram, float], b: Dict[Gram, float]) -> float:
    norm_a = math.sqrt(sum(v * v for v in a.values()))
    norm_b = math.sqrt(sum(v * v for v in b.values()))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    dot = sum(v * b[g] for g, v in a.items() if g in b)
    return dot / (norm_a * norm_b)


def cider_scores(pairs: Sequence[EvalPair], n_max: int = 4) -> List[float]:
    N = len({p.video_id for p in pairs})
    if N < 2:
        raise UsageError("CIDEr needs at least 2 distinct videos: IDF is degenerate (log(1/1) = 0) for one")
    df = document_frequency(pairs, n_max)

    def idf(gram: Gram) -> float:
        return math.log(N / max(1, df[gram]))

    scores: List[float] = []
    for pair in pairs:
        per_order = []
        for n in range(1, n_max + 1):
            cand = _tfidf(pair.candidate, n, idf)
            sims = [_cosine(cand, _tfidf(ref, n, idf)) for ref in pair.references]
            per_order.append(sum(sims) / len(sims))
        scores.append(CIDER_SCALE * sum(per_order) / n_max)
    return scores


def cider(pairs: Sequence[EvalPair], n_max: int = 4) -> float:
    scores = cider_scores(pairs, n_max)
    return sum(scores) / len(scores)
