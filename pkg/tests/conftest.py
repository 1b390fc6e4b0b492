import pytest

from rankbench.car import build_reference_model, generate_cases
from rankbench.harness import run_grid


@pytest.fixture(scope="session")
def car():
    return build_reference_model()


@pytest.fixture(scope="session")
def cases(car):
    return generate_cases(car)


@pytest.fixture(scope="session")
def grid(car, cases):
    """The default experiment grid, computed once per session."""
    return run_grid(car, cases, threads=1)
