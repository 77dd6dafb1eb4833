import numpy as np
import pytest

from harmonics.geometry import parse_space


@pytest.fixture
def s2():
    return parse_space("S2")


@pytest.fixture
def cp2():
    return parse_space("CP2")


@pytest.fixture
def rp2():
    return parse_space("RP2")


@pytest.fixture
def product():
    return parse_space("S2xT1")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
