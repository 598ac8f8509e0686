"""Immutable multi-column text value with word-level edit operations.

Every transformation, constraint, and search method in the engine operates on
:class:`AttackedText` rather than on raw strings. An instance holds an ordered
sequence of named text columns (a single-column input is just a sequence of
length one) plus a bag of attack bookkeeping attributes. All edit operations
return a new instance; the source is never mutated, so values can be shared
freely across worker processes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Iterable, Mapping, Sequence

# Words are maximal runs of Unicode letters/digits plus internal apostrophes.
# Underscore is excluded on purpose: it is not a letter or digit.
WORD_RE = re.compile(r"[^\W_]+(?:['’][^\W_]+)*", re.UNICODE)

_WHITESPACE_RE = re.compile(r"\s")

#: attack_attrs keys with reserved meaning.
MODIFIED_INDICES = "modified_indices"
ORIGINAL_INDEX = "original_index"
PREVIOUS = "previous"


def tokenize(text: str) -> list[str]:
    """Split ``text`` into words under the canonical tokenizer.

    Separator characters (whitespace, punctuation, symbols) are dropped from
    the word list but remain part of the owning column's text.
    """
    return WORD_RE.findall(text)


@dataclass(frozen=True)
class WordSpan:
    """Maps one word back to its owning column and its character span.

    Offsets index into the joined text; ``char_start < char_end`` always holds
    because words are non-empty.
    """

    word_index: int
    char_start: int
    char_end: int
    column_name: str


class AttackedText:
    """An ordered, immutable sequence of ``(column_name, column_value)`` pairs.

    Parameters
    ----------
    columns:
        Either a plain string (stored as a single column named ``"text"``) or
        an ordered iterable of ``(name, value)`` pairs. Column order is
        preserved through every operation.
    attack_attrs:
        Optional bookkeeping attributes. Reserved keys: ``modified_indices``
        (set of word indices edited so far), ``original_index`` (dataset row
        this text came from) and ``previous`` (the predecessor text this one
        was derived from).
    """

    def __init__(
        self,
        columns: str | Iterable[tuple[str, str]],
        attack_attrs: Mapping[str, Any] | None = None,
    ) -> None:
        if isinstance(columns, str):
            pairs: tuple[tuple[str, str], ...] = (("text", columns),)
        else:
            pairs = tuple((str(name), str(value)) for name, value in columns)
        if not pairs:
            raise ValueError("AttackedText requires at least one column")
        self._columns = pairs
        attrs: dict[str, Any] = dict(attack_attrs) if attack_attrs else {}
        attrs.setdefault(MODIFIED_INDICES, set())
        attrs[MODIFIED_INDICES] = set(attrs[MODIFIED_INDICES])
        self.attack_attrs = attrs

    # -- structure ---------------------------------------------------------

    @property
    def columns(self) -> tuple[tuple[str, str], ...]:
        return self._columns

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self._columns)

    @property
    def column_values(self) -> tuple[str, ...]:
        return tuple(value for _, value in self._columns)

    @cached_property
    def joined_text(self) -> str:
        """All column values joined with exactly one space between columns.

        The join is literal: empty columns still contribute their separator,
        no collapsing is applied.
        """
        return " ".join(value for _, value in self._columns)

    def column_ranges(self) -> tuple[tuple[str, int, int], ...]:
        """Character range of each column inside :attr:`joined_text`."""
        ranges = []
        offset = 0
        for name, value in self._columns:
            ranges.append((name, offset, offset + len(value)))
            offset += len(value) + 1
        return tuple(ranges)

    # -- words -------------------------------------------------------------

    @cached_property
    def words(self) -> tuple[str, ...]:
        return tuple(w for span, w in self._spans_and_words)

    @property
    def num_words(self) -> int:
        return len(self.words)

    @cached_property
    def word_spans(self) -> tuple[WordSpan, ...]:
        """One span per word, sorted by ``char_start``, non-overlapping."""
        return tuple(span for span, _ in self._spans_and_words)

    @cached_property
    def _spans_and_words(self) -> tuple[tuple[WordSpan, str], ...]:
        # Tokenizing column-by-column is equivalent to tokenizing the joined
        # text because the joining space is always a separator.
        out: list[tuple[WordSpan, str]] = []
        offset = 0
        index = 0
        for name, value in self._columns:
            for match in WORD_RE.finditer(value):
                span = WordSpan(index, offset + match.start(), offset + match.end(), name)
                out.append((span, match.group()))
                index += 1
            offset += len(value) + 1
        return tuple(out)

    @property
    def modified_indices(self) -> set[int]:
        return set(self.attack_attrs[MODIFIED_INDICES])

    # -- derivation --------------------------------------------------------

    def with_attack_attrs(self, **attrs: Any) -> "AttackedText":
        """Return a copy with extra attack attributes set."""
        merged = dict(self.attack_attrs)
        merged.update(attrs)
        return AttackedText(self._columns, merged)

    def _derive(self, columns: Sequence[tuple[str, str]], modified: set[int]) -> "AttackedText":
        attrs = dict(self.attack_attrs)
        attrs[MODIFIED_INDICES] = modified
        attrs[PREVIOUS] = self
        return AttackedText(tuple(columns), attrs)

    def _span_in_column(self, i: int) -> tuple[int, int, int]:
        """Return (column position, start, end) of word ``i`` inside its column."""
        span = self.word_spans[i]
        for pos, (name, start, end) in enumerate(self.column_ranges()):
            if name == span.column_name and start <= span.char_start and span.char_end <= end:
                return pos, span.char_start - start, span.char_end - start
        raise AssertionError(f"word {i} has no owning column")  # pragma: no cover

    def replace_word_at(self, i: int, new_word: str) -> "AttackedText":
        """Return a new text with word ``i`` replaced by ``new_word``.

        Only the characters of the original word's span are substituted, so
        surrounding punctuation is retained. The replacement must itself be a
        single word under the canonical tokenizer; anything else would
        desynchronize word indexing.
        """
        if not 0 <= i < self.num_words:
            raise IndexError(f"word index {i} out of range for {self.num_words} words")
        if not new_word or _WHITESPACE_RE.search(new_word):
            raise ValueError(f"replacement word {new_word!r} is empty or contains whitespace")
        if tokenize(new_word) != [new_word]:
            raise ValueError(f"replacement {new_word!r} is not a single word")
        pos, start, end = self._span_in_column(i)
        columns = list(self._columns)
        name, value = columns[pos]
        columns[pos] = (name, value[:start] + new_word + value[end:])
        return self._derive(columns, self.modified_indices | {i})

    def delete_word_at(self, i: int) -> "AttackedText":
        """Return a new text with word ``i`` removed from its owning column.

        Separator whitespace around the removed word is normalized to a single
        space inside that column; modified indices after ``i`` shift down.
        """
        if not 0 <= i < self.num_words:
            raise IndexError(f"word index {i} out of range for {self.num_words} words")
        pos, start, end = self._span_in_column(i)
        columns = list(self._columns)
        name, value = columns[pos]
        left = value[:start].rstrip()
        right = value[end:].lstrip()
        if left and right:
            new_value = left + " " + right
        else:
            new_value = left + right
        columns[pos] = (name, new_value)
        modified = {j - 1 if j > i else j for j in self.modified_indices if j != i}
        return self._derive(columns, modified)

    # -- identity ----------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AttackedText):
            return NotImplemented
        return self._columns == other._columns

    def __hash__(self) -> int:
        return hash(self._columns)

    def __repr__(self) -> str:
        cols = ", ".join(f"{name}={value!r}" for name, value in self._columns)
        return f"AttackedText({cols})"

    def __getstate__(self) -> dict[str, Any]:
        # cached_property values are derived; keep pickles lean for the
        # parallel out-queue.
        return {"_columns": self._columns, "attack_attrs": self.attack_attrs}

    def __setstate__(self, state: dict[str, Any]) -> None:
        self._columns = state["_columns"]
        self.attack_attrs = state["attack_attrs"]
