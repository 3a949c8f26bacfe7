import numpy as np
import pytest

from otfs_airborne.array import ArrayGeometry, steering_matrix
from otfs_airborne.config import ScenarioConfig
from otfs_airborne.geometry import angles_toward, hap_position, place_users


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def desk():
    return ScenarioConfig.desk()


def layout_steering(config, seed):
    """Seeded user drop and the matching steering matrix (L^2, U)."""
    layout = place_users(config, np.random.default_rng(seed))
    zen, az = angles_toward(layout.positions, hap_position(0.0, config))
    geometry = ArrayGeometry.for_carrier(config.array_side, config.carrier_hz)
    return layout, steering_matrix(geometry, zen, az)


def random_grid(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
