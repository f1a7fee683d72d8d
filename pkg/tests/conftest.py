import pytest

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict[str, str] = {}


@pytest.fixture
def record():
    def _record(key: str, passed: bool, detail: str):
        line = f"{key}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE[key] = line
        print(line)
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[1].rstrip("ab"))):
        terminalreporter.write_line(ACCEPTANCE[key])
