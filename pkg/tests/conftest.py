"""
Pytest configuration and fixtures
"""

import pytest
import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.kernels import brownian, exponential, matern32
from src.models import ContinuousModel, get_trend


@pytest.fixture
def ou():
    """Exponential (OU) kernel with lambda = 2"""
    return exponential(2.0)


@pytest.fixture
def matern():
    """Matern 3/2 kernel with lambda = 2"""
    return matern32(2.0)


@pytest.fixture
def const1():
    return get_trend("const1")


@pytest.fixture
def ou_model(ou, const1):
    """Continuous observation of an OU process on [0, 1]"""
    return ContinuousModel(ou, const1, (0.0, 1.0))


@pytest.fixture
def matern_model(matern, const1):
    """Continuous observation of y and y' on [0, 1]"""
    return ContinuousModel(matern, const1, (0.0, 1.0))


@pytest.fixture
def bm_model(const1):
    """Brownian motion observed on [1, 2]"""
    return ContinuousModel(brownian(), const1, (1.0, 2.0))
