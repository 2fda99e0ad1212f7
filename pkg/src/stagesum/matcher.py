"""Pair each source segment with target sentences.

Two policies:

* ``greedy``: grow a subset of target sentences one sentence at a time,
  always taking the candidate that most increases ROUGE-1 F1 against the
  segment, until nothing strictly improves it.
* ``duplicate``: every segment gets the whole target.
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Sequence

from .corpus import Sample
from .errors import ConfigError, StagesumError
from .rouge import overlap_score, rouge_tokens
from .segmenter import Segment, segment_source
from .text import Unit, count_tokens, split_sentences

Policy = Literal["greedy", "duplicate"]
POLICIES = ("greedy", "duplicate")


@dataclass(frozen=True)
class MatchedPair:
    segment: Segment
    target_sentences: tuple[Unit, ...]
    target_text: str

    def to_record(self, stage: int) -> dict:
        return {
            "id": self.segment.sample_id,
            "stage": stage,
            "seg_index": self.segment.seg_index,
            "query": self.segment.query,
            "source_segment": self.segment.source_text,
            "target_segment": self.target_text,
        }


@dataclass
class StageDataset:
    stage_index: int
    pairs: list[MatchedPair]
    policy: str = "greedy"
    # sample id -> split label / full (pre-segmentation) source length
    splits: dict[str, str] = field(default_factory=dict)
    source_tokens: dict[str, int] = field(default_factory=dict)

    @property
    def provenance(self) -> dict[tuple[str, int], str]:
        return {(p.segment.sample_id, p.segment.seg_index): p.segment.sample_id for p in self.pairs}

    def sample_ids(self) -> list[str]:
        return list(self.source_tokens)

    def mean_target_tokens(self) -> float:
        if not self.pairs:
            return 0.0
        return sum(count_tokens(p.target_text) for p in self.pairs) / len(self.pairs)

    def to_records(self) -> list[dict]:
        return [p.to_record(self.stage_index) for p in self.pairs]


def dataset_from_records(records, samples: Sequence[Sample] = ()) -> StageDataset:
    """Rebuild a dataset from stage-dataset file records.

    Segments come back as a single unit holding ``source_segment``. Split
    labels and full source lengths are taken from ``samples`` when given.
    """
    pairs = []
    stage = 1
    for rec in records:
        stage = rec["stage"]
        text = rec["source_segment"]
        query = rec.get("query")
        segment = Segment(
            rec["id"], rec["seg_index"], (Unit(0, text),), query,
            count_tokens(text) + (count_tokens(query) if query else 0),
        )
        target = rec["target_segment"]
        pairs.append(MatchedPair(segment, tuple(split_sentences(target)), target))
    by_id = {s.id: s for s in samples}
    ids = list(dict.fromkeys(p.segment.sample_id for p in pairs))
    return StageDataset(
        stage_index=stage,
        pairs=pairs,
        splits={i: by_id[i].split for i in ids if i in by_id},
        source_tokens={
            i: by_id[i].source_tokens if i in by_id
            else sum(count_tokens(p.segment.source_text) for p in pairs if p.segment.sample_id == i)
            for i in ids
        },
    )


def greedy_select(reference: Sequence[str], candidates: Sequence[Sequence[str]]) -> tuple[list[int], list[float]]:
    """Greedy ROUGE-1 F1 subset selection over candidate token lists.

    Returns the chosen indices in ascending order and the F1 after each
    greedy addition (the zero-overlap fallback adds no trace entry).
    """
    if not candidates:
        raise ValueError("greedy selection needs at least one candidate")
    ref = Counter(reference)
    cand = [Counter(c) for c in candidates]
    chosen: list[int] = []
    hyp: Counter = Counter()
    current = 0.0
    trace: list[float] = []
    while True:
        best_idx, best = None, current
        for i, counts in enumerate(cand):
            if i in chosen:
                continue
            score = overlap_score(hyp + counts, ref).f1
            if score > best:
                best_idx, best = i, score
        if best_idx is None:
            break
        chosen.append(best_idx)
        hyp += cand[best_idx]
        current = best
        trace.append(best)
    if not chosen:
        singles = [overlap_score(c, ref).f1 for c in cand]
        chosen.append(max(range(len(cand)), key=lambda i: (singles[i], -i)))
    return sorted(chosen), trace


def greedy_match(segment: Segment, target_sentences: Sequence[Unit]) -> MatchedPair:
    if not target_sentences:
        raise ValueError(f"sample {segment.sample_id}: no target sentences to match")
    chosen, _ = greedy_select(
        rouge_tokens(segment.source_text),
        [rouge_tokens(t.text) for t in target_sentences],
    )
    picked = tuple(target_sentences[i] for i in chosen)
    return MatchedPair(segment, picked, " ".join(u.text for u in picked))


def duplicate_match(segment: Segment, target: str) -> MatchedPair:
    return MatchedPair(segment, tuple(split_sentences(target)), target)


def _match_sample(sample: Sample, k: int, policy: str) -> list[MatchedPair]:
    try:
        segments = segment_source(sample, k)
        if policy == "duplicate":
            return [duplicate_match(seg, sample.target) for seg in segments]
        targets = split_sentences(sample.target)
        return [greedy_match(seg, targets) for seg in segments]
    except ConfigError as exc:
        raise ConfigError(f"sample {sample.id}: {exc}") from exc
    except ValueError as exc:
        raise StagesumError(f"sample {sample.id}: {exc}") from exc


def build_stage_dataset(
    samples: Sequence[Sample],
    k: int,
    policy: str = "greedy",
    stage_index: int = 1,
    workers: int = 1,
) -> StageDataset:
    """Segment every sample and match targets; pairs come out in sample, then segment order."""
    if policy not in POLICIES:
        raise ConfigError(f"unknown matching policy {policy!r}; expected one of {POLICIES}")
    if workers > 1 and len(samples) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_sample = list(pool.map(lambda s: _match_sample(s, k, policy), samples))
    else:
        per_sample = [_match_sample(s, k, policy) for s in samples]
    return StageDataset(
        stage_index=stage_index,
        pairs=[pair for pairs in per_sample for pair in pairs],
        policy=policy,
        splits={s.id: s.split for s in samples},
        source_tokens={s.id: s.source_tokens for s in samples},
    )
