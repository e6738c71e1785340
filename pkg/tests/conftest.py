import numpy as np
import pytest

from lrdstate import validate_params

# The canonical working parameter set used throughout the suite: two non-base
# states with distinct memory exponents, base-state mass 0.5.
CANONICAL = dict(hurst=(0.8, 0.6), prob=(0.2, 0.3), coupling=(0.1, 0.1))


@pytest.fixture(scope="session")
def canonical():
    return validate_params(**CANONICAL)


@pytest.fixture(scope="session")
def gbp_h8():
    """Single non-base state, strong memory (H=0.8)."""
    return validate_params((0.8,), (0.2,), (0.1,))


@pytest.fixture(scope="session")
def gbp_h6():
    """Single non-base state, moderate memory (H=0.6)."""
    return validate_params((0.6,), (0.3,), (0.1,))


@pytest.fixture()
def rng():
    return np.random.default_rng(20240915)
