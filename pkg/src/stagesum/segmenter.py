"""Cut a sample's source into segments of at most K tokens.

Cuts fall between units (sentences or turns). The query, when present,
is prepended to every segment and its tokens count against K. A unit
that alone exceeds the remaining budget is hard-split at token
boundaries so nothing is dropped.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import Sample
from .errors import ConfigError
from .text import Unit, count_tokens, token_spans


@dataclass(frozen=True)
class Segment:
    sample_id: str
    seg_index: int
    units: tuple[Unit, ...]
    query: str | None
    token_count: int

    @property
    def source_text(self) -> str:
        return " ".join(u.text for u in self.units)

    @property
    def text(self) -> str:
        """The backbone input: query (if any) followed by the segment."""
        if self.query:
            return f"{self.query} {self.source_text}"
        return self.source_text


def hard_split(unit: Unit, budget: int) -> list[Unit]:
    """Split ``unit`` into pieces of exactly ``budget`` tokens (the last may be shorter).

    Pieces keep the unit's index and kind. A unit that already fits is
    returned unchanged.
    """
    if budget < 1:
        raise ValueError(f"hard_split budget must be positive, got {budget}")
    spans = token_spans(unit.text)
    if len(spans) <= budget:
        return [unit]
    pieces = []
    for start in range(0, len(spans), budget):
        chunk = spans[start : start + budget]
        pieces.append(Unit(unit.index, unit.text[chunk[0][0] : chunk[-1][1]], unit.kind))
    return pieces


def effective_budget(k: int, query: str | None) -> int:
    """Tokens left for source units once the query is accounted for."""
    if k < 1:
        raise ConfigError(f"token budget K must be >= 1, got {k}")
    if not query:
        return k
    query_tokens = count_tokens(query)
    if k <= query_tokens + 1:
        raise ConfigError(
            f"token budget K={k} leaves no room for source text after a "
            f"{query_tokens}-token query"
        )
    return k - query_tokens


def segment_source(sample: Sample, k: int) -> list[Segment]:
    budget = effective_budget(k, sample.query)
    query_tokens = count_tokens(sample.query) if sample.query else 0

    pieces: list[tuple[Unit, int]] = []
    for unit in sample.units:
        for piece in hard_split(unit, budget):
            pieces.append((piece, count_tokens(piece.text)))

    groups: list[tuple[list[Unit], int]] = []
    current: list[Unit] = []
    used = 0
    for piece, size in pieces:
        if current and used + size > budget:
            groups.append((current, used))
            current, used = [], 0
        current.append(piece)
        used += size
    if current:
        groups.append((current, used))

    return [
        Segment(sample.id, i, tuple(units), sample.query, used + query_tokens)
        for i, (units, used) in enumerate(groups)
    ]
