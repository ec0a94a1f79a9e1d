"""Shared pytest plumbing.

The acceptance tests register one verdict line per criterion here; the
terminal-summary hook prints them all at the end of the run so the full
scorecard is visible even when individual criteria fail.
"""

import pytest

_CRITERION_LINES = []


@pytest.fixture(scope="session")
def criteria_log():
    return _CRITERION_LINES


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERION_LINES:
            terminalreporter.write_line(line)
