from contextlib import contextmanager

import pytest

ACCEPTANCE_RESULTS = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion for the summary."""

    @contextmanager
    def check(name):
        try:
            yield
        except BaseException:
            ACCEPTANCE_RESULTS.append((name, "FAIL"))
            raise
        ACCEPTANCE_RESULTS.append((name, "PASS"))

    return check


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{status}: {name}")
