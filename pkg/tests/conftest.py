import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

SPEC_DIR = Path(__file__).resolve().parent.parent / "specs"


@pytest.fixture(scope="session")
def spec_dir():
    return SPEC_DIR


def load(name):
    from metldpc.ensemble import load_spec

    return load_spec(SPEC_DIR / f"{name}.met")


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
