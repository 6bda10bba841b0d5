import os

import pytest

# records carry a timestamp; pin it so byte-level comparisons are meaningful
os.environ.setdefault("SOURCE_DATE_EPOCH", "1700000000")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running Monte Carlo checks")


@pytest.fixture
def seed():
    return 20240611


# acceptance criteria append (number, verdict line) here; printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
