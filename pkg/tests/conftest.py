import numpy as np
import pytest

from theta_forge.symplectic import sample_siegel_point


@pytest.fixture
def rng():
    return np.random.default_rng(20240615)


@pytest.fixture
def tau_g1(rng):
    return sample_siegel_point(1, rng)


@pytest.fixture
def tau_g2(rng):
    return sample_siegel_point(2, rng)


@pytest.fixture
def tau_g3(rng):
    return sample_siegel_point(3, rng)
