import os

import pytest
from hypothesis import settings

from pointnls.model import Params
from pointnls.shooting import ground_state_shoot, solve_fixed_alpha

settings.register_profile("default", max_examples=50, deadline=None)
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES = []


def record(line: str) -> None:
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def cubic2d():
    """d = 2, p = 3, lambda = 1 with alpha = 1 (lambda > lambda_alpha)."""
    return Params(2, 1, 3.0, 1.0, 1.0)


@pytest.fixture(scope="session")
def ground(cubic2d):
    return ground_state_shoot(cubic2d)


@pytest.fixture(scope="session")
def nodal_alpha0():
    p = Params(2, 1, 3.0, 1.0, 0.0)
    return {k: solve_fixed_alpha(p, k) for k in (1, 2, 3)}
