import pytest

# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict = {}


def record(number: int, title: str, ok: bool, detail: str = "") -> bool:
    line = f"criterion {number:2d} [{'PASS' if ok else 'FAIL'}] {title}"
    if detail:
        line += f": {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok


@pytest.fixture
def acceptance():
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
