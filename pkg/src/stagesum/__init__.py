"""Multi-stage split-then-summarize pipeline for inputs longer than a model's context."""

from .backend import BackendSpec, SummarizeRequest, Summarizer
from .corpus import Sample, load_corpus
from .estimator import (
    StageStats,
    compression_rate,
    estimate_stages,
    generated_token_multiplier,
    inference_time_fraction,
)
from .matcher import build_stage_dataset, duplicate_match, greedy_match
from .pipeline import PipelineConfig, run_pipeline
from .rouge import RougeScore, rouge_l, rouge_l_summary, rouge_n, score_corpus
from .segmenter import Segment, segment_source
from .text import Unit, count_tokens, ngrams, split_sentences, tokenize

__version__ = "0.1.0"

__all__ = [
    "BackendSpec",
    "PipelineConfig",
    "RougeScore",
    "Sample",
    "Segment",
    "StageStats",
    "SummarizeRequest",
    "Summarizer",
    "Unit",
    "build_stage_dataset",
    "compression_rate",
    "count_tokens",
    "duplicate_match",
    "estimate_stages",
    "generated_token_multiplier",
    "greedy_match",
    "inference_time_fraction",
    "load_corpus",
    "ngrams",
    "rouge_l",
    "rouge_l_summary",
    "rouge_n",
    "run_pipeline",
    "score_corpus",
    "segment_source",
    "split_sentences",
    "tokenize",
]
