import numpy as np
import pytest

from polyharm import catalog


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def sol3():
    return catalog.lookup("Sol3").spec


@pytest.fixture(scope="session")
def g49():
    return catalog.lookup("G4.9", alpha=1.0).spec
