import pytest

ACCEPTANCE_LINES: dict[str, str] = {}


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion, then assert it."""

    def record(name: str, passed: bool, detail: str = ""):
        ACCEPTANCE_LINES[name] = f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}"
        assert passed, f"{name}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: int(k.split()[0][2:])):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
