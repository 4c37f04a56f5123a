import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=200,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile(
    "acceptance",
    max_examples=1000,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# criterion number -> {"title": str, "tests": {nodeid: (passed, details)}}
_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or not (rep.when == "call" or rep.failed):
        return
    n, title = marker.args
    entry = _criteria.setdefault(n, {"title": title, "tests": {}})
    details = ", ".join(f"{k}={v}" for k, v in item.user_properties)
    entry["tests"][item.nodeid] = (rep.passed, details)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_criteria):
        entry = _criteria[n]
        results = entry["tests"].values()
        ok = all(passed for passed, _ in results)
        tr.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {entry['title']}")
        for nodeid, (passed, details) in entry["tests"].items():
            if details or not passed:
                name = nodeid.split("::")[-1]
                tr.write_line(f"    {'ok  ' if passed else 'FAIL'} {name}{': ' + details if details else ''}")
