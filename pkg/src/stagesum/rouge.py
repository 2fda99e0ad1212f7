"""ROUGE-1/2/L written from scratch.

Token-level functions (:func:`rouge_n`, :func:`rouge_l`) score the
sequences exactly as given. String-level entry points go through
:func:`rouge_tokens`, which drops punctuation-only tokens the way the
classic scorer does, and optionally Porter-stems.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from .text import ngrams, split_sentences, tokenize


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def zero(cls) -> RougeScore:
        return cls(0.0, 0.0, 0.0)

    @classmethod
    def from_counts(cls, hits: int, hyp_total: int, ref_total: int) -> RougeScore:
        if hyp_total == 0 or ref_total == 0 or hits == 0:
            return cls.zero()
        return cls(hits / hyp_total, hits / ref_total, 2.0 * hits / (hyp_total + ref_total))

    def as_dict(self) -> dict[str, float]:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


@lru_cache(maxsize=1)
def _stemmer():
    try:
        from nltk.stem.porter import PorterStemmer
    except ImportError as exc:  # pragma: no cover - depends on environment
        raise RuntimeError("stemming requires nltk (pip install 'stagesum[stem]')") from exc
    return PorterStemmer()


def rouge_tokens(text: str, stem: bool = False) -> list[str]:
    """Tokens used for scoring: :func:`tokenize` minus pure punctuation."""
    tokens = [tok for tok in tokenize(text) if any(ch.isalnum() for ch in tok)]
    if stem:
        stemmer = _stemmer()
        tokens = [stemmer.stem(tok) for tok in tokens]
    return tokens


def overlap_score(hyp_counts: Counter, ref_counts: Counter) -> RougeScore:
    """ROUGE-N from precomputed n-gram multisets."""
    if len(hyp_counts) > len(ref_counts):
        small, large = ref_counts, hyp_counts
    else:
        small, large = hyp_counts, ref_counts
    hits = sum(min(count, large[gram]) for gram, count in small.items() if gram in large)
    return RougeScore.from_counts(hits, sum(hyp_counts.values()), sum(ref_counts.values()))


def rouge_n(hypothesis: Sequence[str], reference: Sequence[str], n: int = 1) -> RougeScore:
    return overlap_score(ngrams(hypothesis, n), ngrams(reference, n))


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """LCS length via the bit-parallel recurrence of Hyyrö (2004).

    Bit ``i`` of ``v`` is cleared once ``a[i]`` has been matched on the
    current row; the LCS length is the number of cleared bits.
    """
    m = len(a)
    if m == 0 or not b:
        return 0
    full = (1 << m) - 1
    masks: dict[str, int] = {}
    for i, tok in enumerate(a):
        masks[tok] = masks.get(tok, 0) | (1 << i)
    v = full
    for tok in b:
        u = v & masks.get(tok, 0)
        v = ((v + u) | (v - u)) & full
    return m - bin(v).count("1")


def rouge_l(hypothesis: Sequence[str], reference: Sequence[str]) -> RougeScore:
    return RougeScore.from_counts(
        lcs_length(hypothesis, reference), len(hypothesis), len(reference)
    )


def _lcs_positions(ref: Sequence[str], hyp: Sequence[str]) -> set[int]:
    """Indices into ``ref`` covered by one LCS alignment with ``hyp``."""
    m, n = len(ref), len(hyp)
    table = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        row, prev = table[i], table[i - 1]
        r = ref[i - 1]
        for j in range(1, n + 1):
            if r == hyp[j - 1]:
                row[j] = prev[j - 1] + 1
            else:
                row[j] = row[j - 1] if row[j - 1] > prev[j] else prev[j]
    hits: set[int] = set()
    i, j = m, n
    while i > 0 and j > 0:
        if ref[i - 1] == hyp[j - 1]:
            hits.add(i - 1)
            i -= 1
            j -= 1
        elif table[i - 1][j] >= table[i][j - 1]:
            i -= 1
        else:
            j -= 1
    return hits


def rouge_l_summary(hypothesis: str, reference: str, stem: bool = False) -> RougeScore:
    """Summary-level ROUGE-L over sentence-split texts (union LCS).

    For each reference sentence the LCS hits against every hypothesis
    sentence are unioned. A hit is only credited while both sides still
    have unused copies of that token, which keeps precision within [0, 1].
    """
    hyp_sents = [rouge_tokens(u.text, stem) for u in split_sentences(hypothesis)]
    ref_sents = [rouge_tokens(u.text, stem) for u in split_sentences(reference)]
    hyp_sents = [s for s in hyp_sents if s]
    ref_sents = [s for s in ref_sents if s]
    hyp_total = sum(map(len, hyp_sents))
    ref_total = sum(map(len, ref_sents))
    if hyp_total == 0 or ref_total == 0:
        return RougeScore.zero()

    hyp_left = Counter(tok for sent in hyp_sents for tok in sent)
    ref_left = Counter(tok for sent in ref_sents for tok in sent)
    hits = 0
    for ref_sent in ref_sents:
        union: set[int] = set()
        for hyp_sent in hyp_sents:
            union |= _lcs_positions(ref_sent, hyp_sent)
        for pos in sorted(union):
            tok = ref_sent[pos]
            if hyp_left[tok] > 0 and ref_left[tok] > 0:
                hits += 1
                hyp_left[tok] -= 1
                ref_left[tok] -= 1
    return RougeScore.from_counts(hits, hyp_total, ref_total)


VARIANTS = ("rouge-1", "rouge-2", "rouge-l")


def score_pair(hypothesis: str, reference: str, stem: bool = False) -> dict[str, RougeScore]:
    hyp = rouge_tokens(hypothesis, stem)
    ref = rouge_tokens(reference, stem)
    return {
        "rouge-1": rouge_n(hyp, ref, 1),
        "rouge-2": rouge_n(hyp, ref, 2),
        "rouge-l": rouge_l_summary(hypothesis, reference, stem),
    }


def score_corpus(
    pairs: Iterable[tuple[str, str]], stem: bool = False
) -> dict[str, RougeScore]:
    """Unweighted mean of per-pair precision, recall and F1 for each variant."""
    per_pair = [score_pair(hyp, ref, stem) for hyp, ref in pairs]
    if not per_pair:
        raise ValueError("score_corpus needs at least one (hypothesis, reference) pair")
    total = len(per_pair)
    out = {}
    for variant in VARIANTS:
        scores = [p[variant] for p in per_pair]
        out[variant] = RougeScore(
            sum(s.precision for s in scores) / total,
            sum(s.recall for s in scores) / total,
            sum(s.f1 for s in scores) / total,
        )
    return out
