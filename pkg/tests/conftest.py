import numpy as np
import pytest

from weyltop.geometry import TopParams
from weyltop.numerics import build_angular_grid
from weyltop.wavefield import ProductState, SingletState


@pytest.fixture(scope="session")
def grid888():
    return build_angular_grid(8, 8, 8)


@pytest.fixture(scope="session")
def params():
    return TopParams()


@pytest.fixture(scope="session")
def singlet(params):
    return SingletState(params=params)


@pytest.fixture(scope="session")
def product(params):
    return ProductState(params=params)


@pytest.fixture
def rng():
    return np.random.default_rng(1357)
