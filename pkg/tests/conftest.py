"""Collects acceptance outcomes and prints one verdict line per criterion."""

import pytest

_OUTCOMES = {}
_TITLES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (report.when != "call" and report.passed):
        return
    number, title = mark.args
    _TITLES[number] = title
    passed = _OUTCOMES.get(number, True) and report.passed
    _OUTCOMES[number] = passed


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        verdict = "PASS" if _OUTCOMES[number] else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {verdict}  {_TITLES[number]}")
