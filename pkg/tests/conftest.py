import pytest

from pcx.algorithm import RunConfig, run
from pcx.problem import Problem, load_problem

# A small problem on which the adaptive strategy runs to completion quickly:
# alpha_tilde is modest, so t_eps and the width thresholds stay coarse.
TOY = (["-x1^3 + x1", "(x1 - 0.5)^2"], [-1.0], [1.0])
TOY_EPS = 0.05

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def toy_problem():
    objectives, lo, hi = TOY
    return Problem.from_strings(objectives, lo, hi, name="toy")


@pytest.fixture(scope="session")
def toy_run(toy_problem):
    return run(toy_problem, RunConfig(eps=TOY_EPS))


def _fixed(name, t0):
    return run(load_problem(name), RunConfig(t0=t0, strategy="fixed"))


@pytest.fixture(scope="session")
def ex51_run():
    return _fixed("ex51", 12)


@pytest.fixture(scope="session")
def ex53_run():
    return _fixed("ex53", 13)
