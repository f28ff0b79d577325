import pytest

from combinatorium.world import World

_RESULTS: dict[int, tuple[str, bool, str]] = {}


def record(number: int, title: str, passed: bool, detail: str = ""):
    """Remember an acceptance outcome for the end-of-session report."""
    _RESULTS[number] = (title, passed, detail)
    print(f"AC{number} {'PASS' if passed else 'FAIL'} {title}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        title, passed, detail = _RESULTS[n]
        terminalreporter.write_line(f"AC{n:<2} {'PASS' if passed else 'FAIL'}  {title}: {detail}")


@pytest.fixture
def world():
    return World(16, 16)
