import json

import pytest

from stagesum.corpus import (
    Sample,
    atomic_write_text,
    load_corpus,
    read_jsonl,
    validate_lines,
    write_corpus,
)
from stagesum.errors import CorpusError


def rec(rid, **kw):
    base = {"id": rid, "source": ["One.", "Two."], "target": "Sum.", "query": None, "split": "train"}
    base.update(kw)
    return json.dumps(base)


def test_valid_corpus():
    report, samples = validate_lines([rec("a"), rec("b"), "", rec("c", split="test")])
    assert report.ok
    assert report.summary() == "3 samples OK"
    assert [s.id for s in samples] == ["a", "b", "c"]
    assert samples[2].split == "test"


def test_empty_target_names_line():
    report, _ = validate_lines([rec("a"), rec("b"), rec("c", target="   ")])
    assert not report.ok
    assert report.violations == ["line 3: 'target' must be a non-empty string"]


def test_duplicate_id_names_both_lines():
    report, samples = validate_lines([rec("a"), rec("b"), rec("a")])
    assert len(report.violations) == 1
    assert "line 3" in report.violations[0] and "line 1" in report.violations[0]
    assert len(samples) == 2


@pytest.mark.parametrize(
    "line, fragment",
    [
        ("{not json", "invalid JSON"),
        ("[1, 2]", "not a JSON object"),
        (rec("a", source=[]), "'source'"),
        (rec("a", source=["ok", ""]), "source unit 1"),
        (rec("a", split="holdout"), "'split'"),
        (rec("a", query=""), "'query'"),
        (rec(""), "'id'"),
    ],
)
def test_schema_violations(line, fragment):
    report, _ = validate_lines([line])
    assert not report.ok
    assert fragment in report.violations[0]


def test_sample_record_round_trip(tmp_path):
    samples = [Sample("x", ("A b.", "C d."), "T.", "q?", "dev"), Sample("y", ("Z.",), "T.")]
    path = tmp_path / "c.jsonl"
    write_corpus(path, samples)
    assert load_corpus(path) == samples
    assert samples[0].source_text == "A b. C d."
    assert samples[0].source_tokens == 6


def test_load_corpus_raises_with_violations(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text(rec("a") + "\n" + rec("a") + "\n")
    with pytest.raises(CorpusError) as info:
        load_corpus(path)
    assert len(info.value.violations) == 1


def test_atomic_write_leaves_no_partial_file(tmp_path):
    path = tmp_path / "out.jsonl"
    path.write_text("old\n")

    # a lone surrogate cannot be encoded, so the write fails midway
    with pytest.raises(UnicodeEncodeError):
        atomic_write_text(path, "new text \ud800")
    assert path.read_text() == "old\n"
    assert [p.name for p in tmp_path.iterdir()] == ["out.jsonl"]


def test_read_jsonl_skips_blank_lines(tmp_path):
    path = tmp_path / "x.jsonl"
    path.write_text('{"a": 1}\n\n{"a": 2}\n')
    assert list(read_jsonl(path)) == [{"a": 1}, {"a": 2}]
