import numpy as np
import pytest
from weighted_tv.backend.fidelity import FidelityTerm
from weighted_tv.backend.grid import Grid, ScalarField
from weighted_tv.backend.integrands import FinslerIntegrand
from weighted_tv.example_data import smooth_random, unit_interval_grid


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def grid_1d():
    return unit_interval_grid(50)


@pytest.fixture
def grid_2d():
    return Grid(shape=(8, 8), spacing=1.0 / 8)


@pytest.fixture
def periodic_grid_2d():
    return Grid(shape=(6, 6), spacing=1.0, boundary="periodic")


@pytest.fixture
def step_1d(grid_1d):
    # 0 on the left half, 1 on the right half
    values = np.zeros(grid_1d.shape)
    values[grid_1d.shape[0] // 2 :] = 1.0
    return ScalarField(grid=grid_1d, values=values)


@pytest.fixture
def half_plane_2d(grid_2d):
    # 1 on the right half of the square, a vertical interface
    values = np.zeros(grid_2d.shape)
    values[:, 4:] = 1.0
    return ScalarField(grid=grid_2d, values=values)


@pytest.fixture
def smooth_2d(grid_2d):
    return smooth_random(grid_2d, seed=3)


@pytest.fixture
def noisy_square():
    grid = Grid(shape=(16, 16), spacing=1.0)
    values = np.zeros(grid.shape)
    values[4:12, 4:12] = 1.0
    noise = np.random.default_rng(1).normal(0, 0.1, grid.shape)
    return ScalarField(grid=grid, values=values + noise)


@pytest.fixture
def weighted_2d(grid_2d):
    w = ScalarField(
        grid=grid_2d,
        values=np.random.default_rng(2).uniform(0.5, 2.0, grid_2d.shape),
    )
    return FinslerIntegrand.weighted(grid_2d, w)


@pytest.fixture
def elliptic_2d(grid_2d):
    return FinslerIntegrand.elliptic(grid_2d, 1.5, [[2.0, 0.5], [0.5, 1.0]])


@pytest.fixture
def quadratic(smooth_2d):
    return FidelityTerm.quadratic(smooth_2d)

