import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from spmelab.grid import Grid
from spmelab.noise_field import Box, NoiseField
from spmelab.signals import gen_brownian

settings.register_profile(
    "spmelab", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("spmelab")


@pytest.fixture
def grid1d() -> Grid:
    return Grid.box(-1.0, 1.0, 1.0 / 32)


@pytest.fixture
def grid2d() -> Grid:
    return Grid.box([-1.0, -1.0], [1.0, 1.0], 1.0 / 16)


@pytest.fixture
def sine_field() -> NoiseField:
    sig = gen_brownian(1024, 1.0 / 1024, 5)
    return NoiseField.from_strings(["sin(pi*x)"], sig, Box((-1.0,), (1.0,)))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
