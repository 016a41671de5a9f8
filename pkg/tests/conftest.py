import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from negmass import kerr
from negmass.params import (
    REFERENCE_DEVICE_HZ,
    TWO_PI,
    BathOccupations,
    PumpConfig,
    circuit_from_hz,
)

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

KAPPA_DRIVEN = TWO_PI * 300e3
OMEGA_I = TWO_PI * 15e6
GAIN = -0.35


@pytest.fixture(scope="session")
def device():
    return circuit_from_hz(REFERENCE_DEVICE_HZ)


@pytest.fixture(scope="session")
def drive(device):
    """Driven working point: G = -0.35, Omega_i = 50 kappa_driven."""
    return kerr.drive_from_gain(device, GAIN, OMEGA_I, kappa_driven=KAPPA_DRIVEN)


@pytest.fixture(scope="session")
def pump(device, drive):
    return PumpConfig.from_coupling(device, drive, TWO_PI * 80e3)


@pytest.fixture(scope="session")
def baths():
    return BathOccupations.thermal(13.0, 0.0, 10.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
