from __future__ import annotations

from collections import defaultdict

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

CRITERIA = {
    1: "Projection oracle",
    2: "Metric oracles",
    3: "Centrality oracles",
    4: "Assortativity",
    5: "ERGM",
    6: "Temporal",
    7: "Louvain",
    8: "End-to-end determinism",
    9: "Conditional real-data reports",
}

_outcomes: dict[int, list[str]] = defaultdict(list)


def pytest_runtest_logreport(report):
    number = getattr(report, "acceptance_number", None)
    if number is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _outcomes[number].append("skipped" if report.skipped else report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        outcome.get_result().acceptance_number = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number, title in CRITERIA.items():
        results = _outcomes.get(number)
        if not results:
            continue
        if any(r == "failed" for r in results):
            status = "FAIL"
        elif all(r == "skipped" for r in results):
            status = "SKIP"
        else:
            status = "PASS"
        terminalreporter.write_line(f"criterion {number} {status}: {title} ({len(results)} checks)")
