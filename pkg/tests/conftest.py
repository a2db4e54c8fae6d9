import numpy as np
import pytest

from sinelab.sampler import cached_bank

SEED = 2024


@pytest.fixture(scope="session")
def bank256() -> np.ndarray:
    """4000 sine-process windows from CUE(256), L = 128."""
    return cached_bank(256, 4000, SEED)


@pytest.fixture(scope="session")
def bank128() -> np.ndarray:
    """4000 windows from CUE(128), L = 64."""
    return cached_bank(128, 4000, SEED)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(7)
