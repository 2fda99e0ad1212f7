"""N coarse stages followed by one fine-grained stage.

A coarse stage segments every source, pairs segments with target
sentences (the training data for that stage's model), summarizes each
segment and concatenates the pieces, wrapped in separators, into the
next stage's source. Coarse stages repeat until the average source
length of the decision split (train, when present) drops below
``early_stop_multiplier * K``. The fine stage then summarizes the first
K tokens of each source once.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping, Sequence

from .backend import BackendSpec, SummarizeRequest, Summarizer
from .corpus import SPLITS, Sample, atomic_write_text, dump_json, read_jsonl, write_corpus, write_jsonl
from .errors import BackendError, BatchError, ConfigError, NonConvergenceError
from .estimator import StageStats, stage_stats
from .matcher import POLICIES, StageDataset, build_stage_dataset
from .rouge import score_corpus
from .segmenter import effective_budget
from .text import split_sentences, truncate_tokens

logger = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    k: int = 1024
    max_coarse_stages: int = 4
    early_stop_multiplier: float = 2.0
    matching_policy: str = "greedy"
    backends: list[BackendSpec] = field(default_factory=lambda: [BackendSpec()])
    separator_open: str = "<s>"
    separator_close: str = "</s>"
    splits: tuple[str, ...] = SPLITS
    stem: bool = False

    def __post_init__(self):
        self.backends = [
            b if isinstance(b, BackendSpec) else BackendSpec.from_dict(b) for b in self.backends
        ]
        self.splits = tuple(self.splits)
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.max_coarse_stages < 0:
            raise ConfigError(f"max_coarse_stages must be >= 0, got {self.max_coarse_stages}")
        if self.early_stop_multiplier < 1:
            raise ConfigError(f"early_stop_multiplier must be >= 1, got {self.early_stop_multiplier}")
        if self.matching_policy not in POLICIES:
            raise ConfigError(f"matching_policy must be one of {POLICIES}, got {self.matching_policy!r}")
        if not self.backends:
            raise ConfigError("at least one backend is required")
        unknown = set(self.splits) - set(SPLITS)
        if unknown or not self.splits:
            raise ConfigError(f"splits must be a non-empty subset of {SPLITS}")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> PipelineConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        return cls(**data)

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["backends"] = [b.to_dict() for b in self.backends]
        out["splits"] = list(self.splits)
        return out

    def backend_for(self, stage_index: int) -> BackendSpec:
        """Spec for 1-based ``stage_index``; stages past the list reuse the last entry."""
        return self.backends[min(stage_index, len(self.backends)) - 1]

    @property
    def early_stop(self) -> bool:
        return self.early_stop_multiplier > 1


@dataclass
class StageResult:
    stage_index: int
    dataset: StageDataset
    coarse_outputs: list[str]
    coarse_segments: dict[str, list[str]]
    next_samples: list[Sample]
    stats: StageStats
    split_stats: dict[str, StageStats]


def assemble_next_source(coarse_segments: Sequence[str], config: PipelineConfig | None = None) -> str:
    if not coarse_segments:
        raise ValueError("cannot assemble a source from zero coarse segments")
    open_, close = ("<s>", "</s>") if config is None else (config.separator_open, config.separator_close)
    return " ".join(f"{open_} {seg} {close}" for seg in coarse_segments)


def should_stop(avg_source_tokens: float, config: PipelineConfig) -> bool:
    return avg_source_tokens < config.early_stop_multiplier * config.k


def _decision_ids(samples: Sequence[Sample]) -> list[str]:
    train = [s.id for s in samples if s.split == "train"]
    return train or [s.id for s in samples]


def average_source_tokens(samples: Sequence[Sample], ids: Sequence[str] | None = None) -> float:
    wanted = None if ids is None else set(ids)
    lengths = [s.source_tokens for s in samples if wanted is None or s.id in wanted]
    if not lengths:
        raise ValueError("no samples to average")
    return sum(lengths) / len(lengths)


def _stage_dir(workdir: Path, stage_index: int) -> Path:
    return workdir / f"stage{stage_index}"


def _load_checkpoint(path: Path, dataset: StageDataset) -> list[str] | None:
    if not path.exists():
        return None
    rows = {(r["id"], r["seg_index"]): r["summary"] for r in read_jsonl(path)}
    keys = [(p.segment.sample_id, p.segment.seg_index) for p in dataset.pairs]
    if set(rows) != set(keys):
        logger.warning("ignoring stale checkpoint %s", path)
        return None
    logger.info("resuming stage %d from %s", dataset.stage_index, path)
    return [rows[key] for key in keys]


def run_coarse_stage(
    samples: Sequence[Sample],
    stage_index: int,
    config: PipelineConfig,
    backend: Summarizer,
    workdir: Path | None = None,
    prev_avg_source: float | None = None,
    workers: int = 1,
) -> StageResult:
    dataset = build_stage_dataset(samples, config.k, config.matching_policy, stage_index, workers)
    stage_dir = None if workdir is None else _stage_dir(Path(workdir), stage_index)
    if stage_dir is not None:
        write_jsonl(stage_dir / "dataset.jsonl", dataset.to_records())

    outputs = None
    if stage_dir is not None:
        outputs = _load_checkpoint(stage_dir / "coarse.jsonl", dataset)
    if outputs is None:
        max_tokens = backend.spec.output_tokens(fine=False)
        requests = [
            SummarizeRequest(p.segment.source_text, max_tokens, p.segment.query, stage_index)
            for p in dataset.pairs
        ]
        try:
            outputs = backend.summarize_batch(requests)
        except BatchError as exc:
            sid = dataset.pairs[exc.index].segment.sample_id
            raise BackendError(f"stage {stage_index}, sample {sid}: {exc.cause}", exc.metadata) from exc
        if stage_dir is not None:
            write_jsonl(
                stage_dir / "coarse.jsonl",
                (
                    {"id": p.segment.sample_id, "stage": stage_index,
                     "seg_index": p.segment.seg_index, "summary": out}
                    for p, out in zip(dataset.pairs, outputs)
                ),
            )

    per_sample: dict[str, list[str]] = {s.id: [] for s in samples}
    for pair, out in zip(dataset.pairs, outputs):
        per_sample[pair.segment.sample_id].append(out)

    next_samples = []
    for s in samples:
        assembled = assemble_next_source(per_sample[s.id], config)
        units = tuple(u.text for u in split_sentences(assembled))
        next_samples.append(Sample(s.id, units, s.target, s.query, s.split))
    if stage_dir is not None:
        write_corpus(stage_dir / "next_corpus.jsonl", next_samples)

    def stats_for(ids):
        return stage_stats(
            dataset, outputs, config.k, config.early_stop, config.early_stop_multiplier,
            prev_avg_source, sample_ids=ids,
        )

    split_stats = {}
    for split in SPLITS:
        ids = [s.id for s in samples if s.split == split]
        if ids:
            split_stats[split] = stats_for(ids)
    return StageResult(
        stage_index=stage_index,
        dataset=dataset,
        coarse_outputs=outputs,
        coarse_segments=per_sample,
        next_samples=next_samples,
        stats=stats_for(_decision_ids(samples)),
        split_stats=split_stats,
    )


def run_fine_stage(
    samples: Sequence[Sample], config: PipelineConfig, backend: Summarizer, stage_index: int = 1
) -> list[tuple[str, str]]:
    """One summary per sample from the first K tokens (query included) of its source."""
    max_tokens = backend.spec.output_tokens(fine=True)
    requests = []
    for s in samples:
        budget = effective_budget(config.k, s.query)
        requests.append(
            SummarizeRequest(truncate_tokens(s.source_text, budget), max_tokens, s.query, stage_index)
        )
    try:
        outputs = backend.summarize_batch(requests)
    except BatchError as exc:
        sid = samples[exc.index].id
        raise BackendError(f"fine stage, sample {sid}: {exc.cause}", exc.metadata) from exc
    return [(s.id, out) for s, out in zip(samples, outputs)]


@dataclass
class PipelineReport:
    config: dict[str, Any]
    executed_coarse_stages: int
    estimate_after_stage_1: dict[str, Any] | None
    trajectory: list[float]
    stages: list[dict[str, Any]]
    fine_stage: dict[str, Any]
    rouge: dict[str, dict[str, dict[str, float]]]
    summaries: dict[str, dict[str, str]]

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        return dump_json(self.to_dict()) + "\n"

    def write(self, path) -> None:
        atomic_write_text(path, self.to_json())


def run_pipeline(
    corpus: Sequence[Sample],
    config: PipelineConfig,
    workdir: str | Path | None = None,
    workers: int = 1,
) -> PipelineReport:
    """Run coarse stages until the stop rule fires, then the fine stage.

    With ``workdir`` set, each stage's dataset, coarse outputs and next
    corpus are written under ``workdir/stage<l>/`` before the next stage
    starts, and existing coarse outputs that match are reused.
    """
    samples = [s for s in corpus if s.split in config.splits]
    if not samples:
        raise ConfigError(f"corpus has no samples in splits {config.splits}")
    decision = _decision_ids(samples)
    trajectory = [average_source_tokens(samples, decision)]
    stages: list[StageResult] = []
    estimate = None

    while not should_stop(trajectory[-1], config):
        if config.max_coarse_stages == 0:
            break
        if len(stages) == config.max_coarse_stages:
            raise NonConvergenceError(trajectory, config.max_coarse_stages)
        stage_index = len(stages) + 1
        logger.info("coarse stage %d: d=%.2f", stage_index, trajectory[-1])
        with Summarizer(config.backend_for(stage_index)) as backend:
            result = run_coarse_stage(
                samples, stage_index, config, backend, workdir,
                prev_avg_source=trajectory[-2] if len(trajectory) > 1 else None,
                workers=workers,
            )
        stages.append(result)
        if stage_index == 1 and result.stats.estimated_remaining is not None:
            estimate = {
                "n_val": result.stats.estimated_remaining,
                "n_hat": result.stats.estimated_stages,
                "d": result.stats.avg_source_tokens,
                "c": result.stats.avg_coarse_segment_tokens,
            }
        samples = result.next_samples
        trajectory.append(average_source_tokens(samples, decision))

    fine_index = len(stages) + 1
    with Summarizer(config.backend_for(fine_index)) as backend:
        finals = dict(run_fine_stage(samples, config, backend, fine_index))

    by_split: dict[str, list[Sample]] = {}
    for s in samples:
        by_split.setdefault(s.split, []).append(s)
    rouge = {}
    summaries = {}
    for split, group in by_split.items():
        scores = score_corpus([(finals[s.id], s.target) for s in group], stem=config.stem)
        rouge[split] = {variant: score.as_dict() for variant, score in scores.items()}
        summaries[split] = {s.id: finals[s.id] for s in group}

    stage_rows = []
    for result in stages:
        row = result.stats.to_dict()
        row["per_split"] = {split: st.to_dict() for split, st in result.split_stats.items()}
        stage_rows.append(row)

    report = PipelineReport(
        config=config.to_dict(),
        executed_coarse_stages=len(stages),
        estimate_after_stage_1=estimate,
        trajectory=trajectory,
        stages=stage_rows,
        fine_stage={
            "stage_index": fine_index,
            "avg_source_tokens": trajectory[-1],
            "samples": len(samples),
        },
        rouge=rouge,
        summaries=summaries,
    )
    if workdir is not None:
        report.write(Path(workdir) / "report.json")
    return report
