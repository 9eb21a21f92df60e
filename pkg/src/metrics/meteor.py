"""
Exact-match METEOR ("METEOR-ex"): no stemming, no synonyms.

The alignment maximises the number of matched unigrams and, among maximal
alignments, minimises the number of chunks (runs adjacent in both
sentences). Scoring:

    P = m/|cand|   R = m/|ref|   F = 10PR / (R + 9P)
    penalty = 0.5 * (chunks/m)^3    score = F * (1 - penalty)
"""

from __future__ import annotations

from collections import Counter
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple

from src.models.evaluation import EvalPair
from src.utils.exceptions import UsageError

ALPHA_WEIGHT = 9.0
FMEAN_SCALE = 10.0
PENALTY_GAMMA = 0.5
PENALTY_BETA = 3.0

# The exact search is exponential in the number of tracked positions.
MAX_TRACKED_POSITIONS = 20


def _tracked(outer: Sequence[str], inner: Sequence[str]) -> List[int]:
    """Inner positions that more than one outer position could claim."""
    counts = Counter(outer)
    return [j for j, tok in enumerate(inner) if counts[tok] > 1]


def _link_bound(candidate: Sequence[str], reference: Sequence[str]) -> int:
    """Upper bound on links: bigrams shared by both sentences, clipped by count."""
    def bigrams(tokens):
        return Counter(zip(tokens, tokens[1:]))
    cand, ref = bigrams(candidate), bigrams(reference)
    return sum(min(c, ref[g]) for g, c in cand.items())


def _greedy_alignment(candidate: Sequence[str], reference: Sequence[str]) -> Tuple[int, int]:
    """(matches, links) preferring to extend the current run."""
    used = set()
    matches = links = 0
    prev = -2
    for tok in candidate:
        options = [j for j, r in enumerate(reference) if r == tok and j not in used]
        if not options:
            prev = -2
            continue
        j = prev + 1 if prev + 1 in options else options[0]
        if j == prev + 1:
            links += 1
        used.add(j)
        matches += 1
        prev = j
    return matches, links


def _exact_alignment(outer: Sequence[str], inner: Sequence[str], tracked: List[int]) -> Tuple[int, int]:
    """(matches, links) maximised lexicographically over one-to-one exact matchings."""
    bit: Dict[int, int] = {j: 1 << k for k, j in enumerate(tracked)}
    vocabulary = set(outer)
    positions: Dict[str, List[int]] = {}
    for j, tok in enumerate(inner):
        if tok in vocabulary:
            positions.setdefault(tok, []).append(j)
    n = len(outer)

    @lru_cache(maxsize=None)
    def best(i: int, used: int, prev: int) -> Tuple[int, int]:
        # prev = inner index aligned to outer[i-1], or -2
        if i == n:
            return 0, 0
        result = best(i + 1, used, -2)
        for j in positions.get(outer[i], ()):
            mask = bit.get(j, 0)
            if used & mask:
                continue
            m, links = best(i + 1, used | mask, j)
            option = (m + 1, links + (1 if j == prev + 1 else 0))
            if option > result:
                result = option
        return result

    return best(0, 0, -2)


def align(candidate: Sequence[str], reference: Sequence[str]) -> Tuple[int, int]:
    """(matches, chunks) of the best exact unigram alignment.

    Matches and links are symmetric in the two sentences, so the search runs
    over whichever orientation tracks fewer positions. Past
    MAX_TRACKED_POSITIONS a run-extending greedy alignment is accepted only
    when it reaches the shared-bigram bound on links, which proves it optimal.
    """
    if not set(candidate) & set(reference):
        return 0, 0
    orientations = [(candidate, reference), (reference, candidate)]
    outer, inner = min(orientations, key=lambda o: len(_tracked(*o)))
    tracked = _tracked(outer, inner)
    if len(tracked) <= MAX_TRACKED_POSITIONS:
        matches, links = _exact_alignment(outer, inner, tracked)
        return matches, matches - links
    matches, links = _greedy_alignment(candidate, reference)
    if links == _link_bound(candidate, reference):
        return matches, matches - links
    raise UsageError(
        f"METEOR-ex alignment of {len(candidate)} and {len(reference)} tokens is too ambiguous to search exactly",
        details={"tracked_positions": len(tracked)},
    )


def meteor_sentence(candidate: Sequence[str], references: Sequence[Sequence[str]]) -> float:
    best = 0.0
    for ref in references:
        m, chunks = align(candidate, ref)
        if m == 0:
            continue
        precision = m / len(candidate)
        recall = m / len(ref)
        fmean = FMEAN_SCALE * precision * recall / (recall + ALPHA_WEIGHT * precision)
        penalty = PENALTY_GAMMA * (chunks / m) ** PENALTY_BETA
        best = max(best, fmean * (1.0 - penalty))
    return best


def meteor_scores(pairs: Sequence[EvalPair]) -> List[float]:
    return [meteor_sentence(p.candidate, p.references) for p in pairs]


def meteor_exact(pairs: Sequence[EvalPair]) -> float:
    if not pairs:
        raise UsageError("METEOR needs at least one pair")
    scores = meteor_scores(pairs)
    return sum(scores) / len(scores)
