"""Shared test plumbing.

The acceptance suite records one human-readable line per criterion; the
terminal-summary hook reprints them after the run so the report survives
pytest's output capture regardless of -s.
"""

ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance report")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
