import numpy as np
import pytest

from critheat.colehopf import AuxiliaryProblem, perron_iterate, solve_auxiliary, transform_initial
from critheat.semigroup import DiskSemigroup
from critheat.stationary import default_solution


@pytest.fixture(scope="session")
def sol():
    return default_solution()


@pytest.fixture(scope="session")
def utilde(sol):
    return sol.as_field()


@pytest.fixture(scope="session")
def sg(sol):
    return DiskSemigroup(sol.rho)


@pytest.fixture(scope="session")
def v0(utilde):
    return transform_initial(utilde)


@pytest.fixture(scope="session")
def aux(v0, sg):
    return solve_auxiliary(AuxiliaryProblem(v0, 0.02), sg=sg)


@pytest.fixture(scope="session")
def perron(utilde, aux, sol):
    return perron_iterate(utilde, aux, sol=sol)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
