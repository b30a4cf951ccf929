import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from besovmhd.dyadic import build_filter_bank
from besovmhd.fields import Grid

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def grid():
    return Grid(2, 64)


@pytest.fixture(scope="session")
def bank(grid):
    return build_filter_bank(grid)


@pytest.fixture(scope="session")
def small_grid():
    return Grid(2, 32)


def rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))
