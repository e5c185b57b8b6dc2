"""Prints a one-line PASS/FAIL scoreboard for the acceptance criteria after
the run, immune to output capture."""

import re

import pytest

_results = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    match = re.match(r"test_criterion_(\d+)_", item.name)
    if not match:
        return
    number = int(match.group(1))
    title = getattr(item.module, "CRITERIA", {}).get(number, item.name)
    if report.when == "call":
        _results[number] = (title, report.passed)
    elif report.failed:  # setup/teardown error counts as a failure
        _results[number] = (title, False)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        title, ok = _results[number]
        terminalreporter.write_line(
            f"criterion {number:2d} [{title}]: {'PASS' if ok else 'FAIL'}")
