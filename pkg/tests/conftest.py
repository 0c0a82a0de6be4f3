import pytest

# (criterion number, line) pairs recorded by the acceptance suite
ACCEPTANCE = []


@pytest.fixture
def record():
    def _record(number: int, name: str, passed: bool, detail: str) -> None:
        ACCEPTANCE.append((number, f"criterion {number} {name}: {'PASS' if passed else 'FAIL'} | {detail}"))

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)
