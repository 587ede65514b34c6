import pytest

_CRITERIA = {}


def pytest_runtest_logreport(report):
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        prev = _CRITERIA.get(crit, True)
        _CRITERIA[crit] = prev and report.outcome == "passed"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_CRITERIA, key=lambda c: int(c.split()[0])):
        status = "PASS" if _CRITERIA[crit] else "FAIL"
        terminalreporter.write_line(f"criterion {crit}: {status}")


@pytest.fixture
def criterion(record_property):
    def mark(label):
        record_property("criterion", label)
    return mark
