import pytest

from sdds_consistency import preset

ACCEPTANCE_RESULTS = {}


def record(criterion, passed, detail=""):
    ACCEPTANCE_RESULTS[criterion] = (bool(passed), detail)


@pytest.fixture(params=[("case1", False), ("case1", True), ("case2", False), ("case2", True)],
                ids=["case1-unreliable", "case1-reliable", "case2-unreliable", "case2-reliable"])
def table_params(request):
    name, reliable = request.param
    return preset(name, reliable=reliable)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE_RESULTS, key=lambda c: int(c.split()[0])):
        passed, detail = ACCEPTANCE_RESULTS[criterion]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {criterion}  {detail}")
