from __future__ import annotations

import math

import pytest

from perturbkit.attacked_text import AttackedText
from perturbkit.constraints import (
    EditDistanceConstraint,
    EmbeddingDistanceConstraint,
    MaxPerturbedConstraint,
    PosLexicon,
    PosMatchConstraint,
    RepeatPrefilter,
    StopwordPrefilter,
    levenshtein,
    load_pos_lexicon,
    load_stopwords,
    single_edit_index,
)
from perturbkit.transformations import EmbeddingTable, ResourceError

import numpy as np


def dp_levenshtein(a: str, b: str) -> int:
    """Textbook full-matrix oracle."""
    rows = len(a) + 1
    cols = len(b) + 1
    table = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        table[i][0] = i
    for j in range(cols):
        table[0][j] = j
    for i in range(1, rows):
        for j in range(1, cols):
            table[i][j] = min(
                table[i - 1][j] + 1,
                table[i][j - 1] + 1,
                table[i - 1][j - 1] + (a[i - 1] != b[j - 1]),
            )
    return table[-1][-1]


def test_stopword_prefilter():
    pre = StopwordPrefilter({"the"})
    assert pre.modifiable_indices(AttackedText("the quick fox")) == {1, 2}
    assert StopwordPrefilter(set()).modifiable_indices(AttackedText("a b")) == {0, 1}
    assert StopwordPrefilter({"a", "b"}).modifiable_indices(AttackedText("a b")) == set()


def test_load_stopwords(tmp_path):
    path = tmp_path / "s.txt"
    path.write_text("# comment\nthe\nA\n\n", encoding="utf-8")
    assert load_stopwords(path) == {"the", "a"}


def test_repeat_prefilter():
    t = AttackedText("a b c")
    assert RepeatPrefilter().modifiable_indices(t) == {0, 1, 2}
    modified = t.replace_word_at(1, "x")
    assert RepeatPrefilter().modifiable_indices(modified) == {0, 2}
    twice = modified.replace_word_at(0, "y").replace_word_at(2, "z")
    assert RepeatPrefilter().modifiable_indices(twice) == set()


def test_pos_match():
    lexicon = PosLexicon({"happy": "ADJ", "glad": "ADJ", "run": "VERB"})
    base = AttackedText("i am happy")
    assert PosMatchConstraint(lexicon).check(base.replace_word_at(2, "glad"), base)
    assert not PosMatchConstraint(lexicon).check(base.replace_word_at(2, "run"), base)


def test_pos_unknown_falls_back_to_noun():
    lexicon = PosLexicon({})
    base = AttackedText("the cat")
    # both unknown -> NOUN == NOUN
    assert PosMatchConstraint(lexicon).check(base.replace_word_at(1, "dog"), base)


def test_pos_lexicon_rejects_unknown_tags():
    with pytest.raises(ResourceError, match="unknown tag"):
        PosLexicon({"x": "ADJECTIVE"})


def test_load_pos_lexicon(tmp_path):
    path = tmp_path / "p.tsv"
    path.write_text("happy\tADJ\nrun\tVERB\n", encoding="utf-8")
    lexicon = load_pos_lexicon(path)
    assert lexicon.tag("happy") == "ADJ"
    assert lexicon.tag("unknown") == "NOUN"
    path.write_text("happy ADJ\n", encoding="utf-8")
    with pytest.raises(ResourceError, match="token<TAB>TAG"):
        load_pos_lexicon(path)


def test_single_edit_index_validation():
    base = AttackedText("a b c")
    with pytest.raises(ValueError, match="exactly one"):
        single_edit_index(base, base)
    with pytest.raises(ValueError, match="exactly one"):
        single_edit_index(base.replace_word_at(0, "x").replace_word_at(1, "y"), base)
    with pytest.raises(ValueError, match="aligned"):
        single_edit_index(base.delete_word_at(0), base)


@pytest.fixture()
def unit_table():
    # "twin" shares aa's vector; bb is at exactly cos 0.7 from aa; cc orthogonal.
    vectors = np.array(
        [[1.0, 0.0], [1.0, 0.0], [0.7, math.sqrt(1 - 0.49)], [0.0, 1.0]]
    )
    return EmbeddingTable(["aa", "twin", "bb", "cc"], vectors, max_neighbors=3)


def test_embedding_distance_identical_vectors_pass_any_threshold(unit_table):
    base = AttackedText("aa x")
    swapped = base.replace_word_at(0, "twin")
    assert EmbeddingDistanceConstraint(unit_table, 1.0).check(swapped, base)


def test_embedding_distance_threshold_inclusive(unit_table):
    base = AttackedText("aa x")
    swapped = base.replace_word_at(0, "bb")
    assert EmbeddingDistanceConstraint(unit_table, 0.7).check(swapped, base)  # cos == 0.7
    assert not EmbeddingDistanceConstraint(unit_table, 0.71).check(swapped, base)


def test_embedding_distance_orthogonal_fails(unit_table):
    base = AttackedText("aa x")
    assert not EmbeddingDistanceConstraint(unit_table, 0.5).check(
        base.replace_word_at(0, "cc"), base
    )


def test_embedding_distance_oov_fails(unit_table):
    base = AttackedText("aa x")
    assert not EmbeddingDistanceConstraint(unit_table, 0.0).check(
        base.replace_word_at(0, "zz"), base
    )


def test_max_perturbed_inclusive():
    original = AttackedText("w0 w1 w2 w3 w4 w5 w6 w7 w8 w9")
    two = original.replace_word_at(0, "x0").replace_word_at(1, "x1")
    three = two.replace_word_at(2, "x2")
    assert MaxPerturbedConstraint(0.2).check(two, original)
    assert not MaxPerturbedConstraint(0.2).check(three, original)
    assert MaxPerturbedConstraint(1.0).check(three, original)
    assert MaxPerturbedConstraint(1.0).compare_against_original


def test_levenshtein_oracle_cases():
    assert levenshtein("cat", "act") == dp_levenshtein("cat", "act") == 2
    assert levenshtein("", "abc") == 3
    assert levenshtein("same", "same") == 0
    for a, b in [("kitten", "sitting"), ("flaw", "lawn"), ("ab", "ba")]:
        assert levenshtein(a, b) == dp_levenshtein(a, b)


def test_edit_distance_constraint():
    base = AttackedText("cat nap")
    swapped = base.replace_word_at(0, "act")
    assert EditDistanceConstraint(2).check(swapped, base)
    assert not EditDistanceConstraint(1).check(swapped, base)
    assert EditDistanceConstraint(0).check(base, base)


def test_checks_are_pure():
    lexicon = PosLexicon({"happy": "ADJ", "glad": "ADJ"})
    constraint = PosMatchConstraint(lexicon)
    base = AttackedText("so happy")
    candidate = base.replace_word_at(1, "glad")
    assert all(constraint.check(candidate, base) for _ in range(3))


def test_prefilters_commute():
    stop = StopwordPrefilter({"the"})
    repeat = RepeatPrefilter()
    t = AttackedText("the quick fox").replace_word_at(2, "dog")
    a = stop.modifiable_indices(t) & repeat.modifiable_indices(t)
    b = repeat.modifiable_indices(t) & stop.modifiable_indices(t)
    assert a == b == {1}
