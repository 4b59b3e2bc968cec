import numpy as np
import pytest

from transonic.gas import GasModel
from transonic.mesh import DomainSpec, build_grid

GAMMAS = (1.0, 1.2, 1.4, 2.0, 2.8)


@pytest.fixture(scope="session")
def gases():
    return {g: GasModel(g) for g in GAMMAS}


@pytest.fixture(scope="session")
def air(gases):
    return gases[1.4]


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def flat_grid():
    return build_grid(DomainSpec("channel", bump_height=0.0), 1.0 / 16)


@pytest.fixture(scope="session")
def bump_grid_32():
    return build_grid(DomainSpec("channel"), 1.0 / 32)


@pytest.fixture(scope="session")
def small_bump_grid():
    # one unit square with a short bump: 16 x 16 cells
    return build_grid(DomainSpec("channel", length=1.0, height=1.0, bump_center=0.5, bump_chord=0.5), 1.0 / 16)
