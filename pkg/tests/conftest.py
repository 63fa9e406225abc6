import pytest

from epsheath.core import PlasmaParams

ACCEPTANCE_LINES = []


@pytest.fixture
def canon():
    return PlasmaParams()


@pytest.fixture
def canon_b():
    return PlasmaParams(phi_b=-0.05)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
