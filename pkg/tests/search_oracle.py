"""Exhaustive enumeration oracle over constrained perturbation spaces.

Used by search tests and the acceptance suite: computes, per modifiable
index, the constrained candidate words (against the original text), then
enumerates every combination of at-most-one swap per index.
"""

from __future__ import annotations

import itertools

from perturbkit.attacked_text import AttackedText
from perturbkit.search import SearchContext, _apply_word_vector


def per_index_options(ctx: SearchContext, original: AttackedText) -> dict[int, list[str]]:
    """Constrained replacement words per modifiable index, original as reference."""
    options: dict[int, list[str]] = {}
    for index in sorted(ctx.modifiable_indices(original)):
        words = []
        for candidate in ctx.constrained_candidates(original, {index}):
            word = candidate.words[index]
            if word not in words:
                words.append(word)
        if words:
            options[index] = words
    return options


def enumerate_perturbations(ctx: SearchContext, original: AttackedText):
    """Yield every reachable text (including the original) exactly once."""
    options = per_index_options(ctx, original)
    indices = sorted(options)
    pools = [[original.words[i]] + options[i] for i in indices]
    seen = set()
    for combo in itertools.product(*pools) if pools else [()]:
        words = list(original.words)
        for index, word in zip(indices, combo):
            words[index] = word
        text = _apply_word_vector(original, words)
        if text.joined_text not in seen:
            seen.add(text.joined_text)
            yield text


def flip_exists(ctx: SearchContext, original: AttackedText, predicate) -> bool:
    """True iff some constrained perturbation (not the original) satisfies ``predicate``.

    ``predicate`` receives a model output produced by a direct wrapper call,
    bypassing the goal function and its cache entirely.
    """
    for text in enumerate_perturbations(ctx, original):
        if text == original:
            continue
        output = ctx.goal.wrapper([text.joined_text])[0]
        if predicate(output):
            return True
    return False
