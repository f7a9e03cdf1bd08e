"""Collect one pass/fail line per acceptance criterion for the terminal summary."""

CRITERIA = []


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    for key, value in report.user_properties:
        if key == "criterion":
            CRITERIA.append((value, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(CRITERIA, key=lambda t: int(t[0].split()[0])):
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  criterion {name}")
