import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from capdrop.functionals import WahlenState
from capdrop.spectral import SpectralGrid, random_field

settings.register_profile("default", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def grid64():
    return SpectralGrid(64)


@pytest.fixture(scope="session")
def grid32():
    return SpectralGrid(32)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def small_wahlen(grid, rng, amplitude=0.02, max_mode=6):
    z = random_field(grid, rng, amplitude, max_mode=max_mode).values
    g = random_field(grid, rng, amplitude, max_mode=max_mode).values
    return WahlenState.from_values(grid, z, g)
