"""Sentence-level BLEU used by the minimize-BLEU goal.

Unsmoothed: the geometric mean of modified (clipped) n-gram precisions for
n = 1..max_n with uniform weights, times the brevity penalty
``min(1, exp(1 - ref_len / cand_len))``. Any zero precision collapses the
score to 0. Tokenization is the engine's canonical word tokenizer.
"""

from __future__ import annotations

import math
from collections import Counter

from .attacked_text import tokenize


def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def modified_precision(candidate: list[str], reference: list[str], n: int) -> float:
    """Clipped n-gram precision; 0.0 when the candidate has no n-grams."""
    cand_counts = _ngram_counts(candidate, n)
    if not cand_counts:
        return 0.0
    ref_counts = _ngram_counts(reference, n)
    clipped = sum(min(count, ref_counts[gram]) for gram, count in cand_counts.items())
    return clipped / sum(cand_counts.values())


def bleu(candidate: str, reference: str, max_n: int = 4) -> float:
    """Sentence BLEU of ``candidate`` against a single ``reference`` in [0, 1]."""
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_n + 1):
        p_n = modified_precision(cand, ref, n)
        if p_n == 0.0:
            return 0.0
        log_sum += math.log(p_n) / max_n
    brevity = min(1.0, math.exp(1.0 - len(ref) / len(cand)))
    return brevity * math.exp(log_sum)
