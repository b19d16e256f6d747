import pytest
from hypothesis import HealthCheck, settings

from orgnet.model import Replication, butterfly_graph, disjoint_paths_graph, single_message_problem

settings.register_profile("default", deadline=None, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(number, title, passed, detail)``."""

    def record(number: int, title: str, passed: bool, detail: str = ""):
        ACCEPTANCE[number] = (title, bool(passed), detail)
        line = f"criterion {number} {title}: {'PASS' if passed else 'FAIL'}" + (f" ({detail})" if detail else "")
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        line = f"criterion {number} {title}: {'PASS' if passed else 'FAIL'}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))


@pytest.fixture
def butterfly_strict():
    return single_message_problem(butterfly_graph(), "S", ["R1", "R2"], 2, Replication.STRICT)


@pytest.fixture
def disjoint_strict():
    return single_message_problem(disjoint_paths_graph(), "S", ["R1", "R2"], 2, Replication.STRICT)


@pytest.fixture
def disjoint_relaxed():
    return single_message_problem(disjoint_paths_graph(), "S", ["R1", "R2"], 2, Replication.RELAXED)
