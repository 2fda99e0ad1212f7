"""Independent reference implementations used as test oracles."""

from __future__ import annotations

import itertools
import random
from collections import Counter

import numpy as np

MATCH_SEED = 20220522
MATCH_INSTANCES = 1000
_VOCAB = [f"w{i}" for i in range(12)]


def random_match_instance(rng: random.Random) -> tuple[list[str], list[list[str]]]:
    segment = rng.choices(_VOCAB, k=rng.randint(5, 30))
    targets = [rng.choices(_VOCAB, k=rng.randint(2, 8)) for _ in range(rng.randint(1, 10))]
    return segment, targets


def match_instances(seed: int = MATCH_SEED, count: int = MATCH_INSTANCES):
    rng = random.Random(seed)
    return [random_match_instance(rng) for _ in range(count)]


def unigram_f1(hyp: list[str], ref: list[str]) -> float:
    """ROUGE-1 F1 straight from the definition."""
    if not hyp or not ref:
        return 0.0
    overlap = sum((Counter(hyp) & Counter(ref)).values())
    if overlap == 0:
        return 0.0
    p = overlap / len(hyp)
    r = overlap / len(ref)
    return 2 * p * r / (p + r)


def best_subset_f1(segment: list[str], targets: list[list[str]]) -> float:
    """Exhaustive maximum over all non-empty subsets."""
    best = 0.0
    for size in range(1, len(targets) + 1):
        for combo in itertools.combinations(range(len(targets)), size):
            hyp = [tok for i in combo for tok in targets[i]]
            best = max(best, unigram_f1(hyp, segment))
    return best


def subset_f1(segment: list[str], targets: list[list[str]], chosen) -> float:
    return unigram_f1([tok for i in sorted(chosen) for tok in targets[i]], segment)


def lcs_dp(a, b) -> int:
    """Textbook O(mn) LCS table."""
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[-1][-1]


def lcs_dp_batch(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """The same table, vectorised over a batch of equal-shape pairs.

    ``a`` has shape (B, m) and ``b`` shape (B, n); returns B LCS lengths.
    """
    batch, m = a.shape
    n = b.shape[1]
    table = np.zeros((batch, m + 1, n + 1), dtype=np.int16)
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            eq = a[:, i - 1] == b[:, j - 1]
            table[:, i, j] = np.where(
                eq, table[:, i - 1, j - 1] + 1, np.maximum(table[:, i - 1, j], table[:, i, j - 1])
            )
    return table[:, m, n]
