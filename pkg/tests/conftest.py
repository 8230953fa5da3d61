import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record_criterion():
    def record(number, ok, detail):
        # ok=None marks an optional criterion that was not run
        status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        ACCEPTANCE_LINES.append(f"criterion {number}: {status}  {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
