import pytest

from claytonpair.fileio import read_table

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def example1():
    return read_table("example1")[0]


@pytest.fixture(scope="session")
def example2():
    return read_table("example2")[0]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
