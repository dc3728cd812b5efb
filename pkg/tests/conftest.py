"""Shared pytest plumbing.

The acceptance tests register one PASS/FAIL line per criterion here; the
terminal-summary hook prints them after the run, outside pytest's output
capture, so they are visible in every run mode.
"""

CRITERION_LINES = []


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)
