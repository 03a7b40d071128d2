import numpy as np
import pytest

from tscf.hilbert import UP_X, UP_Y, SpaceLayout, pauli, product_observable, singlet, tensor
from tscf.tsvf import TwoStateVector

TWO_SPINS = SpaceLayout((2, 2))


@pytest.fixture
def two_spins():
    return TWO_SPINS


@pytest.fixture
def singlet_xy_tsv():
    """Singlet pre-selection, |up_x>|up_y> post-selection."""
    return TwoStateVector(singlet(), tensor(UP_X, UP_Y))


@pytest.fixture
def singlet_xy_observables():
    sy1 = pauli("Y", 0, TWO_SPINS, "sy1")
    sx2 = pauli("X", 1, TWO_SPINS, "sx2")
    return sy1, sx2, product_observable(sy1, sx2, "sy1sx2")


@pytest.fixture
def rng():
    return np.random.default_rng(20260101)
