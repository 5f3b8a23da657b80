import numpy as np
import pytest

from core.schedule import Schedule
from core.twolevel import TwoLevelProblem


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def single_qubit():
    return TwoLevelProblem(1)


@pytest.fixture
def constant_schedule(single_qubit):
    return Schedule(single_qubit, 0)


@pytest.fixture(params=[0, 1, 2, 3], ids=lambda a: f"g{a}")
def alpha(request):
    return request.param


@pytest.fixture
def random_pair(rng):
    """Factory for two random complex vectors of arbitrary norm."""
    def draw(size=2):
        v = rng.normal(size=size) + 1j * rng.normal(size=size)
        w = rng.normal(size=size) + 1j * rng.normal(size=size)
        return v, w
    return draw
