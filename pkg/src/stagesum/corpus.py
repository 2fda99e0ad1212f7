"""Corpus records: one JSON object per line.

Schema::

    {"id": str, "query": str | null, "source": [str, ...],
     "target": str, "split": "train" | "dev" | "test"}

``query`` may be omitted. Other keys are ignored.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator

from .errors import CorpusError
from .text import Unit, UnitKind, count_tokens

SPLITS = ("train", "dev", "test")


@dataclass(frozen=True)
class Sample:
    id: str
    source: tuple[str, ...]
    target: str
    query: str | None = None
    split: str = "train"
    kind: UnitKind = field(default="sentence", compare=False)

    @property
    def units(self) -> list[Unit]:
        return [Unit(i, text, self.kind) for i, text in enumerate(self.source)]

    @property
    def source_text(self) -> str:
        return " ".join(self.source)

    @property
    def source_tokens(self) -> int:
        return sum(count_tokens(u) for u in self.source)

    def to_record(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "query": self.query,
            "source": list(self.source),
            "target": self.target,
            "split": self.split,
        }

    @classmethod
    def from_record(cls, record: dict[str, Any]) -> Sample:
        return cls(
            id=record["id"],
            source=tuple(record["source"]),
            target=record["target"],
            query=record.get("query"),
            split=record.get("split", "train"),
        )


def record_violations(record: Any) -> list[str]:
    """Schema problems of one decoded record (empty list when it is valid)."""
    if not isinstance(record, dict):
        return ["record is not a JSON object"]
    problems = []
    rid = record.get("id")
    if not isinstance(rid, str) or not rid:
        problems.append("'id' must be a non-empty string")
    query = record.get("query")
    if query is not None and (not isinstance(query, str) or not query.strip()):
        problems.append("'query' must be null or a non-empty string")
    source = record.get("source")
    if not isinstance(source, list) or not source:
        problems.append("'source' must be a non-empty list of strings")
    else:
        for i, unit in enumerate(source):
            if not isinstance(unit, str) or not unit.strip():
                problems.append(f"source unit {i} is empty or not a string")
    target = record.get("target")
    if not isinstance(target, str) or not target.strip():
        problems.append("'target' must be a non-empty string")
    if record.get("split") not in SPLITS:
        problems.append(f"'split' must be one of {', '.join(SPLITS)}")
    return problems


@dataclass
class ValidationReport:
    count: int = 0
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        if self.ok:
            return f"{self.count} samples OK"
        return f"{len(self.violations)} violation(s) in {self.count} records"


def validate_lines(lines: Iterable[str]) -> tuple[ValidationReport, list[Sample]]:
    report = ValidationReport()
    samples: list[Sample] = []
    first_seen: dict[str, int] = {}
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        report.count += 1
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            report.violations.append(f"line {lineno}: invalid JSON ({exc.msg})")
            continue
        problems = record_violations(record)
        for problem in problems:
            report.violations.append(f"line {lineno}: {problem}")
        if problems:
            continue
        rid = record["id"]
        if rid in first_seen:
            report.violations.append(
                f"line {lineno}: duplicate id {rid!r} (first seen on line {first_seen[rid]})"
            )
            continue
        first_seen[rid] = lineno
        samples.append(Sample.from_record(record))
    return report, samples


def validate_corpus(path: str | os.PathLike) -> ValidationReport:
    with open(path, encoding="utf-8") as fh:
        report, _ = validate_lines(fh)
    return report


def load_corpus(path: str | os.PathLike) -> list[Sample]:
    """Read and validate a corpus file; raises :class:`CorpusError` on any violation."""
    with open(path, encoding="utf-8") as fh:
        report, samples = validate_lines(fh)
    if not report.ok:
        raise CorpusError(f"{path}: {report.summary()}", report.violations)
    return samples


def read_jsonl(path: str | os.PathLike) -> Iterator[dict[str, Any]]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield json.loads(line)


def dump_json(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True)


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write to a temporary sibling file, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def write_jsonl(path: str | os.PathLike, records: Iterable[dict[str, Any]]) -> None:
    atomic_write_text(path, "".join(dump_json(r) + "\n" for r in records))


def write_corpus(path: str | os.PathLike, samples: Iterable[Sample]) -> None:
    write_jsonl(path, (s.to_record() for s in samples))
