import pytest

from gw_reconstruction import CorrelatorStore
from recursion_engine import HypersurfaceParams, virtual_constants


@pytest.fixture(scope="session")
def quintic_table():
    """L~^{N,5,d} for 5 <= N <= 10, d <= 3"""
    return virtual_constants(5, 5, 3)


@pytest.fixture(scope="session")
def general_type_store():
    """N=6, k=7 (k-N=1) seeded through degree 3"""
    return CorrelatorStore(HypersurfaceParams(6, 7), d_max=3)


@pytest.fixture(scope="session")
def wide_gap_store():
    """N=5, k=7 (k-N=2) seeded through degree 3"""
    return CorrelatorStore(HypersurfaceParams(5, 7), d_max=3)


@pytest.fixture(scope="session")
def quintic_store():
    return CorrelatorStore(HypersurfaceParams(5, 5), d_max=3)


@pytest.fixture(scope="session")
def fano_store():
    """N=7, k=5 (N-k=2): virtual and true constants agree"""
    return CorrelatorStore(HypersurfaceParams(7, 5), d_max=2)


@pytest.fixture(scope="session")
def near_cy_store():
    """N=8, k=9 (k-N=1) seeded through degree 3"""
    return CorrelatorStore(HypersurfaceParams(8, 9), d_max=3)
