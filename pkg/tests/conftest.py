import pytest

_RESULTS = {}


class CriterionLog:
    def __call__(self, number, status, detail):
        _RESULTS[number] = (status, detail)


@pytest.fixture(scope="session")
def criterion():
    return CriterionLog()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        status, detail = _RESULTS[n]
        terminalreporter.write_line(f"criterion {n:>2}: {status:<9} {detail}")
