import pytest

from tablenli.fixtures import case_tables, load_transcripts
from tablenli.pipeline import Engine
from tablenli.tables import parse_table

ORTEGAL_ROWS = [
    ["Municipality", "Pop. (2011)", "Pop. (2018)"],
    ["Cariño", "4,374", "3,945"],
    ["Cerdido", "1,304", "1,126"],
    ["Mañón", "1,541", "1,363"],
    ["Ortigueira", "6,697", "5,804"],
]


@pytest.fixture
def ortegal_table():
    return parse_table(ORTEGAL_ROWS, caption="Ortegal")


@pytest.fixture(scope="session")
def cases():
    return {c["id"]: c for c in load_transcripts()}


@pytest.fixture(scope="session")
def engine():
    return Engine()


@pytest.fixture
def tables_for(cases):
    return lambda case_id: case_tables(cases[case_id])


# -- acceptance reporting: one PASS/FAIL line per criterion in the terminal summary

_criteria: dict[int, tuple[str, bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when not in ("setup", "call"):
        return
    number, title = mark.args
    ok = report.passed if report.when == "call" else not report.failed
    if report.when == "call" or not ok:
        _criteria[number] = (title, ok)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}")
