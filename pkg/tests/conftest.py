import pytest

from flashratchet.stats import RatchetSetup, table1, table2

ACCEPTANCE_LINES = []


def record(criterion: int, ok: bool, detail: str) -> None:
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


@pytest.fixture(scope="session")
def setup():
    return RatchetSetup()


@pytest.fixture(scope="session")
def rows_from_origin(setup):
    return {r["theta"]: r for r in table1(setup)}


@pytest.fixture(scope="session")
def rows_from_stationarity(setup):
    return {r["theta"]: r for r in table2(setup)}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
