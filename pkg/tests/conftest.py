import numpy as np
import pytest

from hkdvlab.spectral import make_grid


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def grid():
    return make_grid(256, 40.0)


@pytest.fixture
def fine_grid():
    return make_grid(1024, 60.0)
