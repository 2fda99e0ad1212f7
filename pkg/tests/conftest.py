"""Collects acceptance outcomes and prints one PASS/FAIL line per criterion."""

from __future__ import annotations

import pytest

_RESULTS: dict[int, dict] = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number = marker.kwargs["criterion"]
    entry = _RESULTS.setdefault(number, {"title": marker.kwargs["title"], "failed": False, "ran": False})
    if call.when == "call":
        entry["ran"] = True
    if call.excinfo is not None and not call.excinfo.errisinstance(pytest.skip.Exception):
        entry["failed"] = True


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        entry = _RESULTS[number]
        status = "FAIL" if entry["failed"] or not entry["ran"] else "PASS"
        terminalreporter.write_line(f"criterion {number}: {status}  {entry['title']}")
