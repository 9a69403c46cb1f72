"""Shared pytest hooks: a one-line PASS/FAIL summary per acceptance criterion."""

ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        status, title, detail = ACCEPTANCE_RESULTS[num]
        terminalreporter.write_line(f"[{status}] criterion {num:>2}: {title} | {detail}")
