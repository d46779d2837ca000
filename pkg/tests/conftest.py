import numpy as np
import pytest

from rsimp import shapes

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def torus_20k():
    return shapes.torus(100, 100)


@pytest.fixture(scope="session")
def small_torus():
    return shapes.torus(40, 40)


@pytest.fixture(scope="session")
def grid20():
    return shapes.grid(20)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
