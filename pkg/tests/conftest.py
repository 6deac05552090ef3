import numpy as np
import pytest

from chemoflow.grid import Params, make_grid


@pytest.fixture
def grid():
    return make_grid(8, 6, 1.0, 0.75)


@pytest.fixture
def params():
    return Params(r=1.0, mu=1.0, alpha=1.0, beta=1.0, chi=1.0, k=0.5, eta=0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
