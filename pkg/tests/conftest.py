import pytest

_VERDICTS: dict[tuple, str] = {}


@pytest.fixture
def verdict():
    """Record the one-line outcome of an acceptance criterion."""
    def record(number: int, passed: bool, detail: str, part: str = "") -> bool:
        label = f"{number:2d}{'/' + part if part else ''}"
        line = f"criterion {label:<16} {'PASS' if passed else 'FAIL'}  {detail}"
        _VERDICTS[(number, part)] = line
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_VERDICTS):
            terminalreporter.write_line(_VERDICTS[k])
