from __future__ import annotations

import os

import pytest

_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


def pytest_collection_modifyitems(config, items):
    if os.environ.get("BATCHRACE_FULL_SCALE") == "1":
        return
    skip = pytest.mark.skip(reason="full-scale sweep; set BATCHRACE_FULL_SCALE=1 to run")
    for item in items:
        if "fullscale" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def criterion(request):
    """``criterion(label, passed, detail)`` logs one acceptance line."""
    lines = request.config.stash[_LINES]

    def log(label, passed, detail=""):
        line = f"{'PASS' if passed else 'FAIL'}  {label}  {detail}".rstrip()
        lines.append(line)
        print(line)
        return passed

    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
