import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_quadratic_problem(rng, n, d, theta=0.1):
    from daccgd.objectives import ProblemInstance, QuadraticBlock
    blocks = [QuadraticBlock(rng.standard_normal((d + 2, d)) * rng.uniform(0.3, 2.0),
                             rng.standard_normal(d + 2), theta) for _ in range(n)]
    return ProblemInstance(blocks)


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
