"""Collects one pass/fail line per acceptance criterion and prints them
after the run, outside pytest's output capture."""

import pytest

ACCEPTANCE_LINES = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call" or "test_acceptance" not in item.nodeid:
        return
    name = item.name
    if report.failed:
        ACCEPTANCE_LINES.append(f"FAIL: {name}")
    elif report.skipped:
        ACCEPTANCE_LINES.append(f"SKIP: {name} ({call.excinfo.value})")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
