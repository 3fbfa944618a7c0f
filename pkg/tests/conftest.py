import numpy as np
import pytest

from walshae.experiments import Lab


@pytest.fixture(scope="session")
def lab():
    """Full-size reference models, trained once per test session."""
    return Lab(seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
