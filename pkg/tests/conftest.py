import numpy as np
import pytest

from slicegym.dynamics import AnalyticModel
from slicegym.state import default_fleet
from slicegym.synthesis import default_initial_state
from slicegym.tools import build_catalog


@pytest.fixture(scope="session")
def registry():
    return build_catalog()


@pytest.fixture(scope="session")
def model():
    return AnalyticModel.reference()


@pytest.fixture()
def baseline_state(model):
    return default_initial_state(model.params)


@pytest.fixture()
def fleet():
    return default_fleet()


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
