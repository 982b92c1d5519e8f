import pytest

ACCEPTANCE = {}


@pytest.fixture
def record_criterion():
    """Store a one-line outcome per acceptance criterion for the terminal summary."""
    def record(number, title, passed, detail=""):
        ACCEPTANCE[number] = (title, passed, detail)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"AC{number:<2} {status}  {title}: {detail}")
