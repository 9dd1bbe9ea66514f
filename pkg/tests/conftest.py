import numpy as np
import pytest
from hypothesis import settings

from mabuchi_torus import CircleGrid

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")


@pytest.fixture
def grid():
    return CircleGrid(1024)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
