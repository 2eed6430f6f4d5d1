import os
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
PRESETS = ROOT / "presets"

_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion.

    Usage: ``criterion(k, ok, detail)``; the line is printed immediately and
    repeated in the terminal summary.
    """

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        _CRITERIA[number] = line
        print(line, file=sys.stderr)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[k])


@pytest.fixture
def cli_env(monkeypatch):
    """Run the CLI without inheriting LLOSIM_* overrides from the caller."""
    for k in list(os.environ):
        if k.startswith("LLOSIM_") and k != "LLOSIM_PURE_PYTHON":
            monkeypatch.delenv(k)
    return monkeypatch
