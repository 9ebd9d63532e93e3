import numpy as np
import pytest

from witnesszone import ZoneConfig


@pytest.fixture
def zone() -> ZoneConfig:
    return ZoneConfig("Z-01")


@pytest.fixture
def zone6() -> ZoneConfig:
    return ZoneConfig("Z-01", witness_count=6)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
