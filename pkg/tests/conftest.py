import sys
from pathlib import Path

import numpy as np
import pytest

# Add src directory to Python path
src_dir = Path(__file__).parent.parent / "src"
sys.path.append(str(src_dir))

from frachs.core import make_grid, make_params
from frachs.spectral import dirichlet_laplacian, eigenpairs


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def params_3d():
    return make_params(3, 0.5, 0.25)


@pytest.fixture
def params_2d():
    return make_params(2, 0.5, 0.25)


@pytest.fixture
def params_1d():
    return make_params(1, 0.4, 0.3, min_dim=1)


@pytest.fixture(scope="module")
def interval_decomposition():
    grid = make_grid([(0.0, np.pi)], 100)
    return eigenpairs(dirichlet_laplacian(grid))
