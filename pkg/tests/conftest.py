import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from birat.zoo import zoo

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def henon():
    return zoo("henon")


@pytest.fixture(scope="session")
def cremona():
    return zoo("cremona")


@pytest.fixture(scope="session")
def power2():
    return zoo("power", 2).forward


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_measure(henon):
    """Henon equilibrium measure on a coarse grid, shared by the fast tests."""
    from birat.currents import equilibrium_measure
    return equilibrium_measure(henon.pair, 3.0, 32, 20)
