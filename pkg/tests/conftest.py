import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

# criterion number -> list of (test name, outcome)
_CRITERIA: dict[int, list[tuple[str, str]]] = {}
_TITLES: dict[int, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        number, title = marker.args
        _TITLES[number] = title
        if hasattr(report, "wasxfail"):
            result = "xfail"
        else:
            result = report.outcome
        _CRITERIA.setdefault(number, []).append((item.name, result))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        results = _CRITERIA[number]
        ok = all(r == "passed" for _, r in results)
        failed = [name for name, r in results if r != "passed"]
        line = f"{'PASS' if ok else 'FAIL'}  criterion {number:2d}  {_TITLES[number]}"
        if failed:
            line += "  (not met: " + ", ".join(f"{n} [{r}]" for n, r in
                                             ((n, r) for n, r in results if r != "passed")) + ")"
        terminalreporter.write_line(line)
