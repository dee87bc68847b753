import pytest

_CRITERION_LINES: list[str] = []


@pytest.fixture
def criterion_log():
    """Collector for per-criterion result lines, echoed after the run."""
    return _CRITERION_LINES.append


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERION_LINES:
            terminalreporter.write_line(line)
