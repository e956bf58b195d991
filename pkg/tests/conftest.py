import json
from pathlib import Path

import pytest

DATA = Path(__file__).resolve().parent / "data"


@pytest.fixture(scope="session")
def oracle():
    return json.loads((DATA / "oracle_values.json").read_text())


@pytest.fixture(scope="session")
def ml_oracle():
    return json.loads((DATA / "ml_oracle.json").read_text())


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one summary line per acceptance criterion; printed at session end."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(number, passed, detail, seconds):
        lines.append((number, f"acceptance {number}: {'PASS' if passed else 'FAIL'} "
                              f"({seconds:.1f} s) {detail}"))

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, text in sorted(lines):
            terminalreporter.write_line(text)
