"""Shared fixtures: seeded Haar instances and small bases."""

import numpy as np
import pytest

from spinsampling.fockspace import enumerate_sector
from spinsampling.haar import sample_haar_unitary, trial_seed
from spinsampling.models import SectorKind


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(20240617))


@pytest.fixture
def haar4():
    return sample_haar_unitary(4, seed=trial_seed(7, 0))


@pytest.fixture
def haar6():
    return sample_haar_unitary(6, seed=trial_seed(7, 1))


@pytest.fixture
def haar8():
    return sample_haar_unitary(8, seed=trial_seed(7, 2))


@pytest.fixture
def hcb_basis_4_2():
    return enumerate_sector(4, 2, SectorKind.HCB)
