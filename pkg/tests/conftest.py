import numpy as np
import pytest
from hypothesis import settings

from nmforge.nmcode import scheme
from nmforge.nmx import load_profile

settings.register_profile("nmforge", deadline=None, max_examples=60)
settings.load_profile("nmforge")


@pytest.fixture(scope="session")
def toy():
    return load_profile("toy20")


@pytest.fixture(scope="session")
def toy_scheme():
    return scheme("toy20")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
