from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from grounder.text import is_question, is_valid_token, tokenize


@pytest.mark.parametrize(
    "raw, expected",
    [
        (
            "Turn off the light, in the kitchen!",
            ["turn", "off", "the", "light", "in", "the", "kitchen"],
        ),
        ("", []),
        (
            "What is the capital city of the US?",
            ["what", "is", "the", "capital", "city", "of", "the", "us"],
        ),
        ("   spaced\tout \n words ", ["spaced", "out", "words"]),
        ("set volume to 11", ["set", "volume", "to", "11"]),
        ("?!... ---", []),
    ],
)
def test_tokenize(raw, expected):
    assert tokenize(raw) == expected


@given(st.text(max_size=80))
def test_tokenize_idempotent(raw):
    once = tokenize(raw)
    assert tokenize(" ".join(once)) == once


@given(st.text(max_size=80))
def test_tokens_are_normalized(raw):
    for tok in tokenize(raw):
        assert is_valid_token(tok)
        assert " " not in tok and tok == tok.lower()


def test_is_question():
    assert is_question(tokenize("What is the capital city of the US?"))
    assert is_question(tokenize("who acted in forest gump"))
    assert is_question(tokenize("does the kitchen light work"))
    assert not is_question(tokenize("turn off the light"))
    assert not is_question([])
