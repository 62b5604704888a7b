import numpy as np
import pytest

from slz.problems import catalog_problem


@pytest.fixture(scope="session")
def free():
    return catalog_problem("free")


@pytest.fixture(scope="session")
def airy():
    return catalog_problem("airy")


@pytest.fixture(scope="session")
def harmonic_full():
    return catalog_problem("harmonic_full")


@pytest.fixture(scope="session")
def harmonic_half():
    return catalog_problem("harmonic_half")


@pytest.fixture(scope="session")
def laguerre():
    return catalog_problem("laguerre", gamma=1.0)


@pytest.fixture(scope="session")
def laguerre_sweep(laguerre):
    from slz.convrate import truncation_sweep

    return truncation_sweep(laguerre, [1, 2, 4], np.array([20.0, 40.0, 80.0]))
