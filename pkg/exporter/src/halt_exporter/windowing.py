"""Tokenization and windowing, bit-compatible with the verification core.

Deliberately re-implemented rather than imported: the exporter must stay
independently buildable, and the conformance tests hold the two
implementations to byte-level agreement. Rules: lowercase, split on
Unicode whitespace, peel leading/trailing non-alphanumeric characters
into single-character tokens, window in non-overlapping chunks of 320.
"""

from __future__ import annotations

WINDOW_TOKENS = 320
EMPTY_PLACEHOLDER = "<empty>"


def tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    for raw in text.lower().split():
        start, end = 0, len(raw)
        while start < end and not raw[start].isalnum():
            start += 1
        while end > start and not raw[end - 1].isalnum():
            end -= 1
        tokens.extend(raw[:start])
        if start < end:
            tokens.append(raw[start:end])
        tokens.extend(raw[end:])
    return tokens


def tokens_or_placeholder(text: str) -> list[str]:
    return tokenize(text) or [EMPTY_PLACEHOLDER]


def window(tokens: list[str], size: int = WINDOW_TOKENS) -> list[list[str]]:
    if not tokens:
        raise ValueError("cannot window an empty token list")
    return [tokens[offset:offset + size] for offset in range(0, len(tokens), size)]
