import numpy as np
import pytest

import mvlab as M


@pytest.fixture(scope="session")
def ou():
    return M.mean_field_ou(1.0, 0.5, 0.4, 1.0, 0.25)


@pytest.fixture(scope="session")
def dict1():
    return M.build_dictionary(1, False, 1, 16, seed=31)


@pytest.fixture(scope="session")
def dict2w():
    return M.build_dictionary(2, True, 1, 16, seed=32)


@pytest.fixture(scope="session")
def outer_family():
    return M.build_outer_family(12, seed=21)


@pytest.fixture(scope="session")
def ou_lam(ou):
    # one mid-size run shared by the statistical tests
    grid = M.TimeGrid.uniform(1.0, 250)
    cfg = M.SimConfig(1500, grid, seed=77)
    return M.simulate_mckv(ou.coefficients, ou.initial, cfg)


@pytest.fixture(scope="session")
def small_ensemble(ou):
    grid = M.TimeGrid.uniform(1.0, 100)
    fam = M.gaussian_family(4, mean_range=(-0.5, 1.0), var_range=(0.1, 0.4), seed=5)
    return M.simulate_ensemble(ou.coefficients, fam, M.SimConfig(300, grid, seed=6))


def rng_for(test_name: str) -> np.random.Generator:
    return M.stream("tests", test_name)
