import hypothesis
import pytest

from kaczmarz_tanabe.problems import model_problem_1
from kaczmarz_tanabe.row_action import build_sweep_operator

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def mp1():
    return model_problem_1()


@pytest.fixture(scope="session")
def mp1_op(mp1):
    return build_sweep_operator(mp1.a)

