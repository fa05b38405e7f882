import pytest

# (criterion number, passed, detail), filled by tests/test_acceptance.py
_CRITERIA = []


@pytest.fixture
def report_criterion():
    def record(number, passed, detail=""):
        _CRITERIA.append((number, bool(passed), detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(_CRITERIA, key=lambda c: c[0]):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
