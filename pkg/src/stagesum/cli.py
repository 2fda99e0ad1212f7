"""Command-line entry point: ``stagesum <subcommand> ...``.

Exit codes: 0 success, 1 validation/usage error, 2 runtime or backend error.
Machine-readable results go to the files named by ``--output``; stdout
carries short human-readable summaries and stderr carries errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any

from . import __version__
from .backend import SummarizeRequest, Summarizer
from .corpus import (
    Sample,
    atomic_write_text,
    dump_json,
    load_corpus,
    read_jsonl,
    validate_lines,
    write_corpus,
    write_jsonl,
)
from .errors import ConfigError, CorpusError, StagesumError
from .estimator import estimate_stages, generated_token_multiplier, inference_time_fraction, stage_stats
from .matcher import POLICIES, build_stage_dataset, dataset_from_records, duplicate_match, greedy_match
from .pipeline import PipelineConfig, assemble_next_source, run_pipeline
from .rouge import score_corpus
from .segmenter import Segment, segment_source
from .text import Unit, split_sentences

logger = logging.getLogger("stagesum")

PATH_KEYS = ("corpus", "workdir", "report")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_override(data: dict, dotted: str) -> None:
    """Apply ``a.b.0.c=value`` to nested dicts/lists; values parse as JSON when possible."""
    if "=" not in dotted:
        raise ConfigError(f"override {dotted!r} is not of the form key=value")
    key, raw = dotted.split("=", 1)
    parts = key.split(".")
    node: Any = data
    for i, part in enumerate(parts):
        last = i == len(parts) - 1
        if isinstance(node, list):
            try:
                idx = int(part)
                node[idx]
            except (ValueError, IndexError):
                raise ConfigError(f"override {key!r}: bad list index {part!r}") from None
            if last:
                node[idx] = _parse_value(raw)
            else:
                node = node[idx]
        elif isinstance(node, dict):
            if last:
                node[part] = _parse_value(raw)
            else:
                node = node.setdefault(part, {})
        else:
            raise ConfigError(f"override {key!r}: {'.'.join(parts[:i])} is not a container")


def load_config(path: str | None, overrides: list[str] | None = None) -> tuple[PipelineConfig, dict]:
    """Parse a JSON run config into a :class:`PipelineConfig` plus its file paths."""
    data: dict = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must be a JSON object")
    for item in overrides or []:
        apply_override(data, item)
    paths = {key: data.pop(key) for key in PATH_KEYS if key in data}
    try:
        config = PipelineConfig.from_dict(data)
    except TypeError as exc:
        raise ConfigError(f"invalid config: {exc}") from None
    return config, paths


def _read_text_lines(path: str) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh]


def cmd_ingest(args) -> int:
    with open(args.input, encoding="utf-8") as fh:
        report, samples = validate_lines(fh)
    for violation in report.violations:
        print(f"{args.input}: {violation}", file=sys.stderr)
    print(report.summary())
    if not report.ok:
        return 1
    if args.output:
        write_corpus(args.output, samples)
    return 0


def cmd_segment(args) -> int:
    config, _ = load_config(args.config, args.set)
    k = args.k or config.k
    samples = load_corpus(args.input)
    records = []
    for s in samples:
        for seg in segment_source(s, k):
            records.append({
                "id": seg.sample_id,
                "seg_index": seg.seg_index,
                "query": seg.query,
                "source_segment": seg.source_text,
                "token_count": seg.token_count,
            })
    write_jsonl(args.output, records)
    print(f"{len(records)} segments from {len(samples)} samples (K={k})")
    return 0


def cmd_match(args) -> int:
    config, _ = load_config(args.config, args.set)
    policy = args.policy or config.matching_policy
    samples = {s.id: s for s in load_corpus(args.input)}
    out = []
    for rec in read_jsonl(args.segments):
        sample = samples.get(rec["id"])
        if sample is None:
            raise ConfigError(f"segment for unknown sample id {rec['id']!r}")
        seg = Segment(rec["id"], rec["seg_index"], (Unit(0, rec["source_segment"]),),
                      rec.get("query"), rec.get("token_count", 0))
        if policy == "duplicate":
            pair = duplicate_match(seg, sample.target)
        else:
            pair = greedy_match(seg, split_sentences(sample.target))
        out.append(pair.to_record(args.stage))
    write_jsonl(args.output, out)
    print(f"{len(out)} pairs ({policy})")
    return 0


def cmd_build_stage(args) -> int:
    config, _ = load_config(args.config, args.set)
    samples = [s for s in load_corpus(args.input) if s.split in config.splits]
    dataset = build_stage_dataset(samples, config.k, config.matching_policy, args.stage, args.workers)
    write_jsonl(args.output, dataset.to_records())
    print(f"stage {args.stage}: {len(dataset.pairs)} pairs from {len(samples)} samples, "
          f"mean target {dataset.mean_target_tokens():.2f} tokens")
    return 0


def cmd_summarize(args) -> int:
    config, _ = load_config(args.config, args.set)
    spec = config.backend_for(args.stage)
    records = list(read_jsonl(args.input))
    max_tokens = spec.output_tokens(fine=args.fine)
    reqs = [
        SummarizeRequest(r["source_segment"], max_tokens, r.get("query"), args.stage)
        for r in records
    ]
    with Summarizer(spec) as backend:
        outputs = backend.summarize_batch(reqs)
    write_jsonl(args.output, (
        {"id": r["id"], "stage": args.stage, "seg_index": r["seg_index"], "summary": out}
        for r, out in zip(records, outputs)
    ))
    print(f"{len(outputs)} summaries (stage {args.stage}, {spec.kind})")
    return 0


def cmd_assemble(args) -> int:
    config, _ = load_config(args.config, args.set)
    samples = load_corpus(args.input)
    pieces: dict[str, list[tuple[int, str]]] = {}
    for rec in read_jsonl(args.coarse):
        pieces.setdefault(rec["id"], []).append((rec["seg_index"], rec["summary"]))
    missing = [s.id for s in samples if s.id not in pieces]
    if missing:
        raise ConfigError(f"no coarse summaries for sample(s): {', '.join(missing[:5])}")
    out = []
    for s in samples:
        ordered = [text for _, text in sorted(pieces[s.id])]
        units = tuple(u.text for u in split_sentences(assemble_next_source(ordered, config)))
        out.append(Sample(s.id, units, s.target, s.query, s.split))
    write_corpus(args.output, out)
    print(f"{len(out)} samples assembled")
    return 0


def cmd_estimate(args) -> int:
    result: dict[str, Any] = {}
    if args.d is not None or args.c is not None:
        if args.d is None or args.c is None:
            raise ConfigError("--d and --c must be given together")
        n_val, n_hat = estimate_stages(args.d, args.c, args.k, args.early_stop)
        result.update(n_val=n_val, n_hat=n_hat)
        print(f"N_val={n_val:.2f} N_hat={n_hat}")
    if args.r is not None:
        mult = generated_token_multiplier(args.r)
        result["generated_token_multiplier"] = mult
        print(f"generated tokens x{mult:.3f}")
        if args.n is not None:
            frac = inference_time_fraction(args.k, args.r, args.n)
            result["inference_time_fraction"] = frac
            print(f"inference time {100 * frac:.1f}% of full attention")
    if not result:
        raise ConfigError("estimate needs --d/--c and/or --r")
    if args.output:
        atomic_write_text(args.output, dump_json(result) + "\n")
    return 0


def cmd_stats(args) -> int:
    config, _ = load_config(args.config, args.set)
    samples = load_corpus(args.corpus) if args.corpus else []
    dataset = dataset_from_records(read_jsonl(args.dataset), samples)
    coarse = {(r["id"], r["seg_index"]): r["summary"] for r in read_jsonl(args.coarse)}
    try:
        outputs = [coarse[(p.segment.sample_id, p.segment.seg_index)] for p in dataset.pairs]
    except KeyError as exc:
        raise ConfigError(f"coarse output file has no summary for pair {exc.args[0]}") from None
    stats = stage_stats(dataset, outputs, config.k, config.early_stop,
                        config.early_stop_multiplier, args.prev_d)
    rate = "-" if stats.compression_rate is None else f"{stats.compression_rate:.2f}"
    n_val = "-" if stats.estimated_remaining is None else f"{stats.estimated_remaining:.2f}"
    print(f"stage {stats.stage_index}: d={stats.avg_source_tokens:.2f} "
          f"c={stats.avg_coarse_segment_tokens:.2f} R={rate} N_val={n_val} N_hat={stats.estimated_stages}")
    if args.output:
        atomic_write_text(args.output, dump_json(stats.to_dict()) + "\n")
    return 0


def cmd_score(args) -> int:
    hyps = _read_text_lines(args.hyp)
    refs = _read_text_lines(args.ref)
    if len(hyps) != len(refs):
        raise ConfigError(f"{args.hyp} has {len(hyps)} lines but {args.ref} has {len(refs)}")
    scores = score_corpus(zip(hyps, refs), stem=args.stem)
    for variant, score in scores.items():
        print(f"{variant.upper()}: P={score.precision:.4f} R={score.recall:.4f} F1={score.f1:.4f}")
    if args.output:
        atomic_write_text(args.output, dump_json({v: s.as_dict() for v, s in scores.items()}) + "\n")
    return 0


def cmd_run(args) -> int:
    config, paths = load_config(args.config, args.set)
    corpus_path = args.input or paths.get("corpus")
    if not corpus_path:
        raise ConfigError("no corpus given (config key 'corpus' or --input)")
    workdir = args.workdir or paths.get("workdir")
    report_path = args.output or paths.get("report") or (Path(workdir) / "report.json" if workdir else None)
    if report_path is None:
        raise ConfigError("no report destination (config key 'report', --output or a workdir)")
    corpus = load_corpus(corpus_path)
    report = run_pipeline(corpus, config, workdir, workers=args.workers)
    report.write(report_path)
    est = report.estimate_after_stage_1
    est_txt = "n/a" if est is None else f"{est['n_hat']} (N_val={est['n_val']:.2f})"
    print(f"coarse stages executed: {report.executed_coarse_stages}; estimated after stage 1: {est_txt}")
    for split, scores in report.rouge.items():
        print(f"{split}: R-1 {scores['rouge-1']['f1']:.4f} R-2 {scores['rouge-2']['f1']:.4f} "
              f"R-L {scores['rouge-l']['f1']:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stagesum", description="Multi-stage split-then-summarize toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")

    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="dotted config override, e.g. backends.0.max_output_tokens=350")
    common.add_argument("--workers", type=int, default=os.cpu_count() or 1)

    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="validate a corpus file")
    p.add_argument("--input", required=True)
    p.add_argument("--output", help="write the validated corpus in normalized form")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("segment", parents=[common], help="cut sources into K-token segments")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--k", type=int)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("match", parents=[common], help="pair segments with target sentences")
    p.add_argument("--input", required=True, help="corpus file (for targets)")
    p.add_argument("--segments", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--policy", choices=POLICIES)
    p.add_argument("--stage", type=int, default=1)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("build-stage", parents=[common], help="segment + match one stage")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--stage", type=int, default=1)
    p.set_defaults(func=cmd_build_stage)

    p = sub.add_parser("summarize", parents=[common], help="run a stage backend over a dataset file")
    p.add_argument("--input", required=True, help="stage dataset file")
    p.add_argument("--output", required=True)
    p.add_argument("--stage", type=int, default=1)
    p.add_argument("--fine", action="store_true", help="use the fine-stage output length default")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("assemble", parents=[common], help="build the next-stage corpus")
    p.add_argument("--input", required=True, help="corpus the coarse outputs were produced from")
    p.add_argument("--coarse", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("estimate", help="stage-count and cost estimates")
    p.add_argument("--d", type=float, help="average source tokens")
    p.add_argument("--c", type=float, help="average coarse-segment tokens")
    p.add_argument("--k", type=int, default=1024)
    p.add_argument("--early-stop", action="store_true")
    p.add_argument("--r", type=float, help="compression rate for the cost model")
    p.add_argument("--n", type=float, help="source tokens for the cost model")
    p.add_argument("--output")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("stats", parents=[common], help="per-stage statistics")
    p.add_argument("--dataset", required=True)
    p.add_argument("--coarse", required=True)
    p.add_argument("--corpus", help="stage input corpus (for full source lengths and splits)")
    p.add_argument("--prev-d", type=float, help="average source tokens of the previous stage")
    p.add_argument("--output")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("score", help="ROUGE-1/2/L of line-aligned files")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--stem", action="store_true")
    p.add_argument("--output")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("run", parents=[common], help="full multi-stage pipeline")
    p.add_argument("--input", help="corpus file (overrides config 'corpus')")
    p.add_argument("--workdir", help="checkpoint directory (overrides config 'workdir')")
    p.add_argument("--output", help="report path (overrides config 'report')")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if getattr(args, "workers", 1) < 1:
        print("stagesum: error: --workers must be >= 1", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except CorpusError as exc:
        print(f"stagesum: {exc}", file=sys.stderr)
        for violation in exc.violations:
            print(f"  {violation}", file=sys.stderr)
        return 1
    except (ConfigError, UsageError) as exc:
        print(f"stagesum: {exc}", file=sys.stderr)
        return 1
    except (StagesumError, OSError, ValueError, KeyError) as exc:
        print(f"stagesum: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
