import pytest
from hypothesis import HealthCheck, settings

from evr.groupcrypto import get_profile

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def micro():
    return get_profile("micro")


@pytest.fixture(scope="session")
def tiny():
    return get_profile("tiny")


@pytest.fixture(scope="session")
def standard():
    return get_profile("standard")


# one summary line per acceptance criterion, whatever the verbosity
_criteria: dict[int, tuple[str, str, float]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not (report.when == "setup" and report.failed):
        return
    number, title = marker.args
    passed = report.passed and not hasattr(report, "wasxfail")
    _criteria[number] = (title, "PASS" if passed else "FAIL", report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, verdict, seconds = _criteria[number]
        terminalreporter.write_line(f"criterion {number:>2}: {verdict}  {title}  ({seconds:.1f}s)")
