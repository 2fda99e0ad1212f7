"""Tokenization, sentence splitting and n-gram counting.

Every token budget in the package is measured with :func:`tokenize`:
lowercased words with punctuation detached, one token per punctuation
mark. Tokens never span whitespace, so joining texts with a space
concatenates their token sequences.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Literal, Sequence

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")
_SENT_BOUNDARY_RE = re.compile(r"(?<=[.!?])\s+")

UnitKind = Literal["sentence", "turn"]


@dataclass(frozen=True)
class Unit:
    """One sentence of a document or one turn of a dialogue."""

    index: int
    text: str
    kind: UnitKind = "sentence"


def tokenize(text: str) -> list[str]:
    return [tok.lower() for tok in _TOKEN_RE.findall(text)]


def count_tokens(text: str) -> int:
    return sum(1 for _ in _TOKEN_RE.finditer(text))


def truncate_tokens(text: str, limit: int) -> str:
    """Cut ``text`` after its first ``limit`` tokens, keeping the original spelling."""
    if limit <= 0:
        return ""
    end = None
    for i, match in enumerate(_TOKEN_RE.finditer(text)):
        if i == limit - 1:
            end = match.end()
            break
    if end is None:
        return text.strip()
    return text[:end].strip()


def token_spans(text: str) -> list[tuple[int, int]]:
    return [m.span() for m in _TOKEN_RE.finditer(text)]


def normalize_whitespace(text: str) -> str:
    return " ".join(text.split())


def split_sentences(text: str, kind: UnitKind = "sentence") -> list[Unit]:
    """Split at ``.``, ``!`` or ``?`` followed by whitespace.

    Abbreviations like "Dr. Smith" produce a false split; that is accepted.
    Joining the returned texts with single spaces gives back
    ``normalize_whitespace(text)``.
    """
    normalized = normalize_whitespace(text)
    if not normalized:
        return []
    pieces = _SENT_BOUNDARY_RE.split(normalized)
    return [Unit(i, piece, kind) for i, piece in enumerate(pieces)]


def ngrams(tokens: Sequence[str], n: int) -> Counter[tuple[str, ...]]:
    if n < 1:
        raise ValueError(f"n-gram order must be >= 1, got {n}")
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))
