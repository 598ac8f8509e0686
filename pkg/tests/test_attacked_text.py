from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from perturbkit.attacked_text import AttackedText, tokenize

# Alphabet mixing word characters, punctuation, and whitespace so column
# round-trips see realistic separator noise.
COLUMN_TEXT = st.text(alphabet="abc XY7 .,!-'", max_size=24)
COLUMNS = st.lists(
    st.tuples(st.sampled_from(["premise", "hypothesis", "context"]), COLUMN_TEXT),
    min_size=1,
    max_size=3,
    unique_by=lambda pair: pair[0],
)


def test_joined_text_two_columns():
    t = AttackedText([("premise", "A man walks."), ("hypothesis", "A man moves.")])
    assert t.joined_text == "A man walks. A man moves."


def test_joined_text_single_column_identity():
    assert AttackedText([("text", "hello")]).joined_text == "hello"


def test_joined_text_literal_join_with_empty_column():
    assert AttackedText([("a", ""), ("b", "x")]).joined_text == " x"


def test_words_simple():
    assert AttackedText("the quick fox").words == ("the", "quick", "fox")


def test_words_apostrophes_and_hyphens():
    # Frozen from the reference tokenizer: internal apostrophes bind, hyphens split.
    assert AttackedText("don't stop-me now").words == ("don't", "stop", "me", "now")


def test_words_empty():
    assert AttackedText("").words == ()


def test_replace_word_simple():
    t = AttackedText("the quick fox")
    out = t.replace_word_at(1, "fast")
    assert out.joined_text == "the fast fox"
    assert out.modified_indices == {1}
    assert t.joined_text == "the quick fox"  # source unchanged
    assert out.attack_attrs["previous"] is t


def test_replace_word_lands_in_owning_column():
    t = AttackedText([("p", "a cat"), ("h", "a dog")])
    out = t.replace_word_at(3, "wolf")
    assert out.columns == (("p", "a cat"), ("h", "a wolf"))


def test_replace_chained_union():
    t = AttackedText("the quick fox")
    out = t.replace_word_at(0, "a").replace_word_at(2, "dog")
    assert out.modified_indices == {0, 2}


def test_replace_preserves_punctuation():
    t = AttackedText("a (quick!) fox")
    assert t.replace_word_at(1, "fast").joined_text == "a (fast!) fox"


def test_replace_rejects_bad_words():
    t = AttackedText("the quick fox")
    with pytest.raises(IndexError):
        t.replace_word_at(3, "x")
    with pytest.raises(ValueError):
        t.replace_word_at(0, "two words")
    with pytest.raises(ValueError):
        t.replace_word_at(0, "")
    with pytest.raises(ValueError):
        t.replace_word_at(0, "a-b")  # tokenizes to two words


def test_delete_word_middle():
    assert AttackedText("a b c").delete_word_at(1).joined_text == "a c"


def test_delete_word_boundary():
    assert AttackedText("a b c").delete_word_at(0).joined_text == "b c"
    assert AttackedText("a b c").delete_word_at(2).joined_text == "a b"


def test_delete_reindexes_modified():
    t = AttackedText("a b c").replace_word_at(2, "x")
    assert t.modified_indices == {2}
    assert t.delete_word_at(0).modified_indices == {1}


def test_delete_out_of_range():
    with pytest.raises(IndexError):
        AttackedText("a").delete_word_at(1)


def test_column_spans_two_columns():
    t = AttackedText([("p", "a b"), ("h", "c")])
    assert [(s.word_index, s.column_name) for s in t.word_spans] == [
        (0, "p"),
        (1, "p"),
        (2, "h"),
    ]


def test_column_spans_empty_column_contributes_none():
    t = AttackedText([("p", "a b"), ("h", "")])
    assert all(span.column_name == "p" for span in t.word_spans)


@given(COLUMNS)
def test_round_trip_columns_from_ranges(columns):
    t = AttackedText(columns)
    joined = t.joined_text
    for (name, value), (range_name, start, end) in zip(t.columns, t.column_ranges()):
        assert name == range_name
        assert joined[start:end] == value


@given(COLUMNS)
def test_word_spans_slice_to_words(columns):
    t = AttackedText(columns)
    joined = t.joined_text
    ranges = dict()
    for name, start, end in t.column_ranges():
        ranges[name] = (start, end)
    previous_end = -1
    for span, word in zip(t.word_spans, t.words):
        assert joined[span.char_start : span.char_end] == word
        assert span.char_start > previous_end  # non-overlapping, sorted
        previous_end = span.char_start
        start, end = ranges[span.column_name]
        assert start <= span.char_start and span.char_end <= end


@given(COLUMNS, st.data())
def test_replace_preserves_other_words(columns, data):
    t = AttackedText(columns)
    if t.num_words == 0:
        return
    i = data.draw(st.integers(min_value=0, max_value=t.num_words - 1))
    out = t.replace_word_at(i, "zz9")
    assert out.num_words == t.num_words
    for j in range(t.num_words):
        if j != i:
            assert out.words[j] == t.words[j]
    assert out.words[i] == "zz9"


@given(COLUMNS, st.data())
def test_delete_shrinks_by_one(columns, data):
    t = AttackedText(columns)
    if t.num_words == 0:
        return
    i = data.draw(st.integers(min_value=0, max_value=t.num_words - 1))
    out = t.delete_word_at(i)
    assert out.num_words == t.num_words - 1
    assert out.words == t.words[:i] + t.words[i + 1 :]


@settings(max_examples=80)
@given(COLUMNS, st.data())
def test_modified_indices_equal_diff_after_edit_replay(columns, data):
    # Engine edit sequences touch each index at most once and never restate
    # the same word; under that discipline modified_indices is exactly the
    # set of positions whose word differs from the original aligned word.
    t = AttackedText(columns)
    if t.num_words == 0:
        return
    count = data.draw(st.integers(min_value=1, max_value=min(4, t.num_words)))
    indices = data.draw(
        st.lists(
            st.integers(min_value=0, max_value=t.num_words - 1),
            min_size=count,
            max_size=count,
            unique=True,
        )
    )
    current = t
    for i in indices:
        word = data.draw(st.sampled_from(["qq1", "ww2", "ee3"]))
        if word == t.words[i]:
            word = word + "x"
        current = current.replace_word_at(i, word)
    diff = {j for j in range(t.num_words) if current.words[j] != t.words[j]}
    assert diff == current.modified_indices == set(indices)


def test_single_column_string_shorthand():
    assert AttackedText("hi there").columns == (("text", "hi there"),)


def test_tokenize_matches_per_column_tokenization():
    columns = [("p", "don't stop"), ("h", "now-then")]
    t = AttackedText(columns)
    per_column = [w for _, value in columns for w in tokenize(value)]
    assert list(t.words) == per_column == tokenize(t.joined_text)
