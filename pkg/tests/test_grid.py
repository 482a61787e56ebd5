import numpy as np
import pytest
from weighted_tv.backend.grid import (
    Grid,
    GridMismatchError,
    ScalarField,
    VectorField,
    divergence,
    forward_gradient,
)


@pytest.mark.parametrize("boundary", ["neumann", "periodic"])
def test_divergence_is_negative_adjoint(rng, boundary):
    grid = Grid(shape=(7, 5), spacing=(0.5, 2.0), boundary=boundary)
    u = rng.normal(size=grid.shape)
    z = rng.normal(size=(2, *grid.shape)) * grid.edge_mask()
    lhs = np.sum(forward_gradient(u, grid) * z)
    rhs = -np.sum(u * divergence(z, grid))
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_gradient_norm_bound(rng):
    grid = Grid(shape=(9, 9), spacing=0.25, boundary="periodic")
    for _ in range(10):
        u = rng.normal(size=grid.shape)
        grad = forward_gradient(u, grid)
        assert np.linalg.norm(grad) <= grid.lipschitz_bound * np.linalg.norm(
            u
        ) * (1 + 1e-12)


def test_edge_mask():
    neumann = Grid(shape=(3, 4), spacing=1.0)
    mask = neumann.edge_mask()
    assert not mask[0, -1].any()
    assert not mask[1, :, -1].any()
    assert neumann.edge_count == 2 * 4 + 3 * 3
    periodic = Grid(shape=(3, 4), spacing=1.0, boundary="periodic")
    assert periodic.edge_mask().all()


def test_grid_validation():
    grid = Grid(shape=(4, 6), spacing=0.5)
    assert grid.spacing == (0.5, 0.5)
    assert grid.cell_measure == 0.25
    assert grid.measure == pytest.approx(6.0)
    with pytest.raises(ValueError):
        Grid(shape=(1, 4), spacing=1.0)
    with pytest.raises(ValueError):
        Grid(shape=(2, 2, 2), spacing=1.0)
    with pytest.raises(ValueError):
        Grid(shape=(4,), spacing=-1.0)


def test_coordinates():
    grid = Grid(shape=(4,), spacing=0.5, origin=(1.0,))
    np.testing.assert_allclose(grid.axis_coordinates(0), [1.0, 1.5, 2.0, 2.5])
    (edges,) = grid.edge_coordinates(0)
    np.testing.assert_allclose(edges, [1.25, 1.75, 2.25, 2.75])


def test_check_same(grid_1d, grid_2d):
    grid_2d.check_same(Grid(shape=(8, 8), spacing=1.0 / 8))
    with pytest.raises(GridMismatchError):
        grid_1d.check_same(grid_2d)


def test_scalar_field_validation(grid_2d):
    with pytest.raises(ValueError):
        ScalarField(grid=grid_2d, values=np.zeros((3, 3)))
    values = np.zeros(grid_2d.shape)
    values[0, 0] = np.nan
    with pytest.raises(ValueError):
        ScalarField(grid=grid_2d, values=values)
    field = ScalarField.constant(grid_2d, 2.0)
    assert field.sup_norm == 2.0
    assert field.l2_norm() == pytest.approx(2.0)
    # stored values are read-only
    with pytest.raises(ValueError):
        field.values[0, 0] = 1.0


def test_vector_field_outside_edges(grid_2d):
    values = np.zeros((2, *grid_2d.shape))
    VectorField(grid=grid_2d, values=values)
    values[0, -1, 0] = 1.0
    with pytest.raises(ValueError):
        VectorField(grid=grid_2d, values=values)
