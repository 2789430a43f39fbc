import os
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
INTEL_CANDIDATES = [
    ROOT / "data" / "intel" / "data.txt.gz",
    ROOT / "data" / "intel" / "data.txt",
]


def intel_readings_path() -> Path | None:
    env = os.environ.get("DPSIM_INTEL_READINGS")
    if env:
        return Path(env) if Path(env).is_file() else None
    for p in INTEL_CANDIDATES:
        if p.is_file():
            return p
    return None


_REPORT_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_REPORT_KEY] = []


@pytest.fixture
def acceptance_report(request):
    """Record one PASS/FAIL line per acceptance criterion."""
    lines = request.config.stash[_REPORT_KEY]

    def record(criterion: str, ok: bool, detail: str = "") -> None:
        lines.append(f"[{'PASS' if ok else 'FAIL'}] {criterion}" + (f": {detail}" if detail else ""))

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_REPORT_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
