import os
import sys

import numpy as np
import pytest

abs_src = os.path.abspath(os.path.join(os.path.dirname(__file__), "..", "src"))
if abs_src not in sys.path:
    sys.path.insert(0, abs_src)

from edlab.grid import PhysicalParams, make_grid  # noqa: E402
from edlab.oracles import gaussian_packet  # noqa: E402

SAMPLES = os.path.join(os.path.dirname(__file__), "samples")


@pytest.fixture
def grid():
    """Small grid on the default domain; resolves σ0 = 1 packets comfortably."""
    return make_grid(256, -20.0, 20.0)


@pytest.fixture
def params():
    return PhysicalParams(hbar=1.0, m=1.0)


@pytest.fixture
def hybrid_params():
    return PhysicalParams(hbar=1.0, m=1.0, mu=0.0)


@pytest.fixture
def gaussian(grid, params):
    state, _ = gaussian_packet(1.0, 0.0, 0.0, 0.0, grid, params)
    return state


@pytest.fixture
def boosted(grid, params):
    state, _ = gaussian_packet(1.0, 0.0, 1.0, 0.0, grid, params)
    return state


@pytest.fixture
def bulk(grid):
    """Mask of points holding a non-negligible share of a unit Gaussian."""
    def _mask(rho):
        return rho > 1e-6 * np.max(rho)
    return _mask


@pytest.fixture
def sample_path():
    def _path(name):
        return os.path.join(SAMPLES, name)
    return _path


@pytest.fixture
def config_path():
    def _path(name):
        return os.path.join(os.path.dirname(__file__), "..", "configs", name)
    return _path
