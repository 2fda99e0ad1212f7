"""Stage-count estimation, compression statistics and the inference cost model.

Each coarse stage turns ``d`` source tokens into roughly ``d / K`` coarse
segments of ``c`` tokens, so after ``N`` stages the source length is
``d * (c / K) ** N``. Requiring that to fall below ``m * K`` gives::

    N_val = (log2(m) + log2(K) - log2(d)) / (log2(c) - log2(K))

with ``m = 2`` under early stopping and ``m = 1`` without. Base 2 makes
``log2(m) = 1`` for the early-stopping threshold.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

from .text import count_tokens


def estimate_stages(
    d: float, c: float, k: int, early_stop: bool = True, multiplier: float = 2.0
) -> tuple[float, int]:
    """Real-valued and integer number of coarse stages still needed.

    ``multiplier`` is the early-stopping threshold in units of K and is
    only used when ``early_stop`` is true.
    """
    if d <= 0 or c <= 0:
        raise ValueError(f"average lengths must be positive (d={d}, c={c})")
    if k < 1:
        raise ValueError(f"K must be >= 1, got {k}")
    if c == k:
        raise ValueError("c == K: a stage that outputs K tokens per segment never compresses")
    head = math.log2(multiplier) if early_stop else 0.0
    n_val = (head + math.log2(k) - math.log2(d)) / (math.log2(c) - math.log2(k))
    return n_val, max(0, math.ceil(n_val))


def compression_rate(d_prev: float, d_cur: float) -> float:
    if d_prev <= 0:
        raise ValueError(f"previous stage length must be positive, got {d_prev}")
    return d_cur / d_prev


def _check_rate(r: float) -> None:
    if not 0 <= r < 1:
        raise ValueError(f"compression rate must lie in [0, 1) for the series to converge, got {r}")


def inference_time_fraction(k: float, r: float, n: float) -> float:
    """Multi-stage inference time ``nK / (1 - R)`` as a fraction of full attention's ``n**2``."""
    _check_rate(r)
    if n <= 0:
        raise ValueError(f"source length must be positive, got {n}")
    return k / ((1 - r) * n)


def generated_token_multiplier(r: float) -> float:
    """Tokens generated across all stages per source token: ``1 / (1 - R)``."""
    _check_rate(r)
    return 1 / (1 - r)


@dataclass(frozen=True)
class StageStats:
    stage_index: int
    avg_source_tokens: float
    avg_coarse_segment_tokens: float
    compression_rate: float | None
    estimated_remaining: float | None
    estimated_stages: int
    avg_matched_target_tokens: float
    samples: int
    segments: int

    def to_dict(self) -> dict:
        return asdict(self)


def stage_stats(
    dataset,
    coarse_outputs: Sequence[str],
    k: int,
    early_stop: bool = True,
    multiplier: float = 2.0,
    prev_avg_source: float | None = None,
    sample_ids=None,
) -> StageStats:
    """Table-style statistics for one coarse stage.

    ``coarse_outputs`` must line up with ``dataset.pairs``. Restrict to a
    subset of samples (e.g. one split) with ``sample_ids``.
    """
    if len(coarse_outputs) != len(dataset.pairs):
        raise ValueError(
            f"{len(coarse_outputs)} coarse outputs for {len(dataset.pairs)} stage pairs"
        )
    keep = set(dataset.source_tokens if sample_ids is None else sample_ids)
    lengths = [n for sid, n in dataset.source_tokens.items() if sid in keep]
    chosen = [
        (pair, out) for pair, out in zip(dataset.pairs, coarse_outputs)
        if pair.segment.sample_id in keep
    ]
    if not lengths or not chosen:
        raise ValueError("no samples selected for stage statistics")
    d = sum(lengths) / len(lengths)
    c = sum(count_tokens(out) for _, out in chosen) / len(chosen)
    target_len = sum(count_tokens(p.target_text) for p, _ in chosen) / len(chosen)
    if c == k:
        n_val, n_hat = None, 0
    else:
        n_val, n_hat = estimate_stages(d, c, k, early_stop, multiplier)
    return StageStats(
        stage_index=dataset.stage_index,
        avg_source_tokens=d,
        avg_coarse_segment_tokens=c,
        compression_rate=None if prev_avg_source is None else compression_rate(prev_avg_source, d),
        estimated_remaining=n_val,
        estimated_stages=n_hat,
        avg_matched_target_tokens=target_len,
        samples=len(lengths),
        segments=len(chosen),
    )
