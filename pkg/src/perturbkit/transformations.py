"""Candidate-generating transformations.

Every transformation emits texts differing from the source at exactly one
word index, with a fixed deterministic order: ascending word index, then
neighbor rank / lexicon order / transposition position. Replacements mirror
the case of the original word's first letter.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .attacked_text import AttackedText, tokenize


class ResourceError(Exception):
    """Raised for malformed embedding, lexicon, or tag data files."""


def mirror_case(original: str, replacement: str) -> str:
    """Copy the case of ``original``'s first letter onto ``replacement``."""
    if not original or not replacement:
        return replacement
    if original[0].isupper():
        return replacement[0].upper() + replacement[1:]
    if original[0].islower():
        return replacement[0].lower() + replacement[1:]
    return replacement


def _emit(text: AttackedText, index: int, replacement: str) -> AttackedText | None:
    """Render one single-word swap, or None when it would not change the text."""
    word = text.words[index]
    rendered = mirror_case(word, replacement)
    if rendered == word or tokenize(rendered) != [rendered]:
        return None
    return text.replace_word_at(index, rendered)


class Transformation:
    """Interface: ``candidates(text, indices)`` -> texts with one swapped word."""

    def candidates(self, text: AttackedText, indices: Iterable[int]) -> list[AttackedText]:
        raise NotImplementedError


class EmbeddingTable:
    """Token vectors plus precomputed exact k-nearest-neighbor lists.

    Neighbor lists exclude the token itself and are sorted by descending
    cosine similarity (ties by ascending token id, so ordering is total).
    """

    def __init__(self, tokens: Sequence[str], vectors: np.ndarray, max_neighbors: int) -> None:
        if len(tokens) != vectors.shape[0]:
            raise ValueError("token count does not match vector rows")
        if not np.all(np.isfinite(vectors)):
            raise ResourceError("embedding vectors must be finite")
        self.tokens = list(tokens)
        self.vectors = np.asarray(vectors, dtype=float)
        self.token_ids = {token: idx for idx, token in enumerate(self.tokens)}
        norms = np.linalg.norm(self.vectors, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        self._unit = self.vectors / norms
        self.nn_index = self._build_nn_index(max_neighbors)

    def _build_nn_index(self, k: int) -> list[list[int]]:
        n = len(self.tokens)
        k = min(k, n - 1)
        index: list[list[int]] = []
        chunk = max(1, min(1024, n))
        for start in range(0, n, chunk):
            sims = self._unit[start : start + chunk] @ self._unit.T
            for row_offset, row in enumerate(sims):
                token_id = start + row_offset
                row[token_id] = -np.inf
                order = sorted(range(n), key=lambda j: (-row[j], j))
                index.append(order[:k])
        return index

    def cosine(self, a: str, b: str) -> float | None:
        """Cosine similarity of two tokens, or None if either is unknown."""
        ia = self.token_ids.get(a)
        ib = self.token_ids.get(b)
        if ia is None or ib is None:
            return None
        return float(self._unit[ia] @ self._unit[ib])

    def neighbors(self, token: str, k: int) -> list[str]:
        token_id = self.token_ids.get(token)
        if token_id is None:
            return []
        return [self.tokens[j] for j in self.nn_index[token_id][:k]]


def load_embedding_table(path: str | Path, k: int) -> EmbeddingTable:
    """Parse ``token v1 v2 ... vd`` lines and build exact k-NN lists.

    Dimensionality is inferred from the first line; inconsistent lines are
    reported with their line number.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    path = Path(path)
    tokens: list[str] = []
    rows: list[list[float]] = []
    dim: int | None = None
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ResourceError(f"cannot read embedding file {path}: {exc}") from exc
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        parts = line.split(" ")
        if len(parts) < 2:
            raise ResourceError(f"{path}:{number}: expected 'token v1 ... vd', got {line!r}")
        token = parts[0]
        try:
            vector = [float(part) for part in parts[1:]]
        except ValueError as exc:
            raise ResourceError(f"{path}:{number}: non-numeric field in {line!r}") from exc
        if dim is None:
            dim = len(vector)
        elif len(vector) != dim:
            raise ResourceError(
                f"{path}:{number}: vector has {len(vector)} dimensions, expected {dim}"
            )
        tokens.append(token)
        rows.append(vector)
    if not tokens:
        raise ResourceError(f"{path}: no embedding lines found")
    return EmbeddingTable(tokens, np.array(rows, dtype=float), max_neighbors=k)


class WordSwapEmbedding(Transformation):
    """Swap a word with its top-k nearest neighbors in embedding space."""

    def __init__(self, table: EmbeddingTable, k: int = 8) -> None:
        self.table = table
        self.k = k

    def candidates(self, text: AttackedText, indices: Iterable[int]) -> list[AttackedText]:
        out: list[AttackedText] = []
        for index in sorted(indices):
            word = text.words[index].casefold()
            for neighbor in self.table.neighbors(word, self.k):
                candidate = _emit(text, index, neighbor)
                if candidate is not None:
                    out.append(candidate)
        return out


class SynonymLexicon:
    """Mapping from a token to its single-word synonyms."""

    def __init__(self, entries: dict[str, Sequence[str]]) -> None:
        self.entries: dict[str, tuple[str, ...]] = {}
        for token, synonyms in entries.items():
            token = token.casefold()
            cleaned = []
            for synonym in synonyms:
                synonym = synonym.casefold()
                if tokenize(synonym) != [synonym]:
                    raise ResourceError(
                        f"synonym {synonym!r} for {token!r} is not a single word"
                    )
                if synonym != token:
                    cleaned.append(synonym)
            self.entries[token] = tuple(cleaned)

    def synonyms(self, token: str) -> tuple[str, ...]:
        return self.entries.get(token, ())


def load_synonym_lexicon(path: str | Path) -> SynonymLexicon:
    """Load a JSON object mapping tokens to arrays of synonym tokens."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ResourceError(f"cannot read lexicon file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ResourceError(f"{path}: not a valid lexicon document: {exc}") from exc
    if not isinstance(data, dict) or not all(
        isinstance(v, list) and all(isinstance(s, str) for s in v) for v in data.values()
    ):
        raise ResourceError(f"{path}: lexicon must map tokens to arrays of tokens")
    return SynonymLexicon(data)


class WordSwapLexicon(Transformation):
    """Swap a word with each of its lexicon synonyms."""

    def __init__(self, lexicon: SynonymLexicon) -> None:
        self.lexicon = lexicon

    def candidates(self, text: AttackedText, indices: Iterable[int]) -> list[AttackedText]:
        out: list[AttackedText] = []
        for index in sorted(indices):
            word = text.words[index].casefold()
            for synonym in self.lexicon.synonyms(word):
                candidate = _emit(text, index, synonym)
                if candidate is not None:
                    out.append(candidate)
        return out


class WordSwapNeighboringChar(Transformation):
    """Transpose each pair of adjacent characters in a word (typo noise)."""

    def candidates(self, text: AttackedText, indices: Iterable[int]) -> list[AttackedText]:
        out: list[AttackedText] = []
        for index in sorted(indices):
            word = text.words[index]
            for pos in range(len(word) - 1):
                swapped = word[:pos] + word[pos + 1] + word[pos] + word[pos + 2 :]
                if swapped == word or tokenize(swapped) != [swapped]:
                    continue
                out.append(text.replace_word_at(index, swapped))
        return out
