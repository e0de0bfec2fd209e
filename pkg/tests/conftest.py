import numpy as np
import pytest

from warptrap.geometry import WarpGeometry
from warptrap.spectral import Grid, build_operator, eigen_lowest


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger JIT compilation of the solver kernels once, outside any
    timed region."""
    grid = Grid(0.0, 1.0, 8)
    eigen_lowest(build_operator(grid, lambda x: 0.0 * x), 2)


@pytest.fixture(scope="session")
def geom_m1_trapped():
    return WarpGeometry.of(1, -1.0)


@pytest.fixture(scope="session")
def geom_m1_front():
    return WarpGeometry.of(1, 1.0)


def rng(seed: int = 0) -> np.random.Generator:
    return np.random.default_rng(seed)
