import pytest

from gaussflow.grid import build_grid

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def axi64():
    return build_grid("axisymmetric", 64)


@pytest.fixture(scope="session")
def full16():
    return build_grid("full", 16)


@pytest.fixture
def acceptance_log():
    def record(criterion, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
