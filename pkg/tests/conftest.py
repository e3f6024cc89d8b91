"""Shared pytest hooks: surface the acceptance criterion verdicts.

The acceptance tests record one PASS/FAIL line each; printing them from the
terminal-summary hook keeps them visible under plain ``pytest -v`` (test
output is captured, summary output is not).
"""

ACCEPTANCE_LINES = []


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
