import numpy as np
import pytest

from qubusim import polarization_state
from qubusim.analysis import alpha_for_beta2

THETA = 0.05


def haar_vec(dim, seed):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return z / np.linalg.norm(z)


def two_photon(seed, ids=("1", "2"), paths=("t1", "t2")):
    return polarization_state(haar_vec(4, seed), list(zip(ids, paths)))


def alpha_for(beta2, theta=THETA):
    return alpha_for_beta2(beta2, theta)


@pytest.fixture
def alpha20():
    return alpha_for(20.0)


@pytest.fixture
def alpha40():
    return alpha_for(40.0)
