import pytest

_LINES = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line; the lines are printed after the run."""

    def record(name, ok, detail):
        _LINES.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance")
        for line in _LINES:
            terminalreporter.write_line(line)
