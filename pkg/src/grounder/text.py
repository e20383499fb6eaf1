"""Utterance normalization: everything downstream works on token lists."""

from __future__ import annotations

Token = str

_QUESTION_LEADS = frozenset(
    ["what", "who", "whom", "whose", "which", "where", "when", "why", "how",
     "do", "does", "is"]
)

def _clean(chunk: str) -> str:
    return "".join(ch for ch in chunk if ch.isalnum()).lower()


def tokenize(text: str) -> list[Token]:
    """Lowercase, strip punctuation, split on whitespace.

    Total function: any input (including empty) yields a (possibly empty)
    list of non-empty lowercase alphanumeric tokens, in input order.
    """
    tokens = []
    for chunk in text.split():
        cleaned = _clean(chunk)
        if cleaned:
            tokens.append(cleaned)
    return tokens


def is_valid_token(token: str) -> bool:
    """True iff the string is something tokenize could have produced."""
    return bool(token) and token == _clean(token)


def is_question(tokens: list[Token]) -> bool:
    """Leading wh-word or do/does/is marks the utterance as a question."""
    return bool(tokens) and tokens[0] in _QUESTION_LEADS
