import pytest

from thermval.building import load_building
from thermval.config import data_path
from thermval.weather import load_weather


@pytest.fixture(scope="session")
def demo_model():
    return load_building(data_path("demo_building"))


@pytest.fixture(scope="session")
def demo_weather():
    return load_weather(data_path("demo_weather"))


_criteria: dict[int, dict] = {}


def pytest_runtest_logreport(report):
    marks = getattr(report, "_acceptance", None)
    if marks is None:
        return
    n, title = marks
    entry = _criteria.setdefault(n, {"title": title, "ok": True, "seconds": 0.0, "ran": False})
    entry["seconds"] += report.duration
    if report.when == "call" or report.failed or report.skipped:
        entry["ran"] = True
        if not report.passed:
            entry["ok"] = False


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("acceptance")
    if mark is not None:
        outcome.get_result()._acceptance = tuple(mark.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        e = _criteria[n]
        status = "PASS" if e["ok"] and e["ran"] else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {status}  {e['title']}  ({e['seconds']:.1f} s)")
