import numpy as np
import pytest

_ACCEPTANCE = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def measured(record_property):
    """Attach a human-readable measurement to the acceptance summary line."""

    def record(text):
        record_property("measured", text)

    return record


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = dict(report.user_properties).get("measured", "")
        name = report.nodeid.split("::", 1)[1]
        _ACCEPTANCE.append((name, report.outcome, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, detail in _ACCEPTANCE:
        status = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        line = f"{status:4s}  {name}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
