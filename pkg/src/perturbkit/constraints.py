"""Constraints filter candidate perturbations; pre-constraints filter indices.

A :class:`Constraint` is a pure predicate over (candidate, reference). The
``compare_against_original`` flag picks the reference the search supplies:
the sample's original text, or the candidate's immediate predecessor. A
:class:`PreConstraint` instead restricts which word indices may be modified
at all.
"""

from __future__ import annotations

from pathlib import Path

from .attacked_text import AttackedText
from .transformations import EmbeddingTable, ResourceError

POS_TAGS = ("NOUN", "VERB", "ADJ", "ADV", "OTHER")


class Constraint:
    """Interface: ``check(candidate, reference)`` -> bool; deterministic and pure."""

    compare_against_original = False

    def check(self, candidate: AttackedText, reference: AttackedText) -> bool:
        raise NotImplementedError


class PreConstraint:
    """Interface: ``modifiable_indices(text)`` -> allowed word indices."""

    def modifiable_indices(self, text: AttackedText) -> set[int]:
        raise NotImplementedError


def single_edit_index(candidate: AttackedText, reference: AttackedText) -> int:
    """Index of the one word where ``candidate`` differs from ``reference``.

    Word-pair constraints assume single-word edits; anything else is a
    violated precondition and is reported as such.
    """
    if candidate.num_words != reference.num_words:
        raise ValueError(
            f"candidate has {candidate.num_words} words, reference {reference.num_words}; "
            "word-pair constraints need aligned texts"
        )
    diff = [
        i
        for i, (a, b) in enumerate(zip(candidate.words, reference.words))
        if a != b
    ]
    if len(diff) != 1:
        raise ValueError(f"expected exactly one differing word, found {len(diff)}")
    return diff[0]


class StopwordPrefilter(PreConstraint):
    """Allow only indices whose case-folded word is not a stopword."""

    def __init__(self, stopwords: set[str]) -> None:
        self.stopwords = {w.casefold() for w in stopwords}

    def modifiable_indices(self, text: AttackedText) -> set[int]:
        return {
            i for i, word in enumerate(text.words) if word.casefold() not in self.stopwords
        }


def load_stopwords(path: str | Path) -> set[str]:
    """One token per line; ``#`` comments and blank lines ignored."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ResourceError(f"cannot read stopword file {path}: {exc}") from exc
    words = set()
    for line in lines:
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.casefold())
    return words


class RepeatPrefilter(PreConstraint):
    """A word may be modified at most once per attack."""

    def modifiable_indices(self, text: AttackedText) -> set[int]:
        return set(range(text.num_words)) - text.modified_indices


class PosLexicon:
    """Static token -> coarse tag map; unknown tokens fall back to NOUN."""

    def __init__(self, tags: dict[str, str]) -> None:
        self.tags = {}
        for token, tag in tags.items():
            if tag not in POS_TAGS:
                raise ResourceError(f"unknown tag {tag!r} for token {token!r}; expected {POS_TAGS}")
            self.tags[token.casefold()] = tag

    def tag(self, token: str) -> str:
        return self.tags.get(token.casefold(), "NOUN")


def load_pos_lexicon(path: str | Path) -> PosLexicon:
    """Tab-separated ``token<TAB>TAG`` lines."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ResourceError(f"cannot read POS lexicon {path}: {exc}") from exc
    tags = {}
    for number, line in enumerate(lines, start=1):
        line = line.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ResourceError(f"{path}:{number}: expected token<TAB>TAG, got {line!r}")
        tags[parts[0]] = parts[1]
    return PosLexicon(tags)


class PosMatchConstraint(Constraint):
    """The replacement's coarse part-of-speech must equal the original word's."""

    def __init__(self, lexicon: PosLexicon) -> None:
        self.lexicon = lexicon

    def check(self, candidate: AttackedText, reference: AttackedText) -> bool:
        index = single_edit_index(candidate, reference)
        return self.lexicon.tag(candidate.words[index]) == self.lexicon.tag(reference.words[index])


class EmbeddingDistanceConstraint(Constraint):
    """Swapped word pair must have cosine similarity >= ``min_cos`` (inclusive).

    Out-of-vocabulary words fail the check.
    """

    def __init__(self, table: EmbeddingTable, min_cos: float) -> None:
        self.table = table
        self.min_cos = min_cos

    def check(self, candidate: AttackedText, reference: AttackedText) -> bool:
        index = single_edit_index(candidate, reference)
        cos = self.table.cosine(
            reference.words[index].casefold(), candidate.words[index].casefold()
        )
        return cos is not None and cos >= self.min_cos


class MaxPerturbedConstraint(Constraint):
    """At most ``max_ratio`` of the original's words may be modified (inclusive)."""

    compare_against_original = True

    def __init__(self, max_ratio: float) -> None:
        if not 0.0 < max_ratio <= 1.0:
            raise ValueError("max_ratio must be in (0, 1]")
        self.max_ratio = max_ratio

    def check(self, candidate: AttackedText, original: AttackedText) -> bool:
        if original.num_words == 0:
            return True
        return len(candidate.modified_indices) / original.num_words <= self.max_ratio


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (ca != cb))
            )
        previous = current
    return previous[-1]


class EditDistanceConstraint(Constraint):
    """Levenshtein distance between joined texts must be <= ``max_dist`` (inclusive)."""

    def __init__(self, max_dist: int) -> None:
        if max_dist < 0:
            raise ValueError("max_dist must be >= 0")
        self.max_dist = max_dist

    def check(self, candidate: AttackedText, reference: AttackedText) -> bool:
        return levenshtein(candidate.joined_text, reference.joined_text) <= self.max_dist
