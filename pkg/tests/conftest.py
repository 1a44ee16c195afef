import pytest

import qpjensen as qp
from qpjensen.cocycle import LEParams

ALPHA = qp.GOLDEN_MEAN


@pytest.fixture(scope="session")
def alpha():
    return ALPHA


@pytest.fixture(scope="session")
def fast_le():
    """Short-orbit estimator params for unit tests (not for tolerances
    tighter than ~1e-3)."""
    return LEParams(orbit_length=4000, phase_count=16)


@pytest.fixture(scope="session")
def std_le():
    return LEParams()


@pytest.fixture(scope="session")
def amo2():
    return qp.amo(2.0)


@pytest.fixture(scope="session")
def amo_half():
    return qp.amo(0.5)


@pytest.fixture(scope="session")
def sem_std():
    return qp.sem(0.6, 0.3)


@pytest.fixture(scope="session")
def free_potential():
    return qp.ZeroPotential()


@pytest.fixture(scope="session")
def amo2_energy(alpha, amo2):
    return qp.auto_energy(amo2, alpha)


@pytest.fixture(scope="session")
def amo_half_energy(alpha, amo_half):
    return qp.auto_energy(amo_half, alpha)
