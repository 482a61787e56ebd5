import numpy as np
import pytest
from weighted_tv.backend.grid import Grid, ScalarField
from weighted_tv.backend.integrands import (
    FinslerIntegrand,
    eval_phi,
    eval_polar,
    phi_gradient,
)
from weighted_tv.backend.weights import (
    WEIGHT_PRESETS,
    get_weight_preset,
)


def test_weight_presets():
    assert set(WEIGHT_PRESETS) >= {
        "constant",
        "smooth_sin",
        "fig2_sqrt",
        "fig3_square",
        "fig4_holder",
        "fig5_singular",
    }
    w = get_weight_preset("fig2_sqrt")
    x = np.array([0.25, 1.0, 2.0])
    np.testing.assert_allclose(w((x,)), [0.7, 1.2, 2.2])
    assert not get_weight_preset("fig5_singular").satisfies_positivity
    assert get_weight_preset("constant", value=3.0)((x,))[0] == 3.0
    with pytest.raises(KeyError):
        get_weight_preset("nope")
    with pytest.raises(ValueError):
        get_weight_preset("constant", value=0.0)


def test_weighted_samples_edges_and_cells():
    grid = Grid(shape=(4,), spacing=1.0)
    w = ScalarField(grid=grid, values=[1.0, 3.0, 5.0, 7.0])
    phi = FinslerIntegrand.weighted(grid, w)
    np.testing.assert_allclose(phi.edge_weights[0, :3], [2.0, 4.0, 6.0])
    assert phi.bound >= 7.0


def test_polar_inequality(rng, elliptic_2d, weighted_2d):
    for phi in (elliptic_2d, weighted_2d):
        for _ in range(50):
            x = tuple(int(i) for i in rng.integers(0, 8, size=2))
            p, q = rng.normal(size=2), rng.normal(size=2)
            value = eval_phi(phi, x, p) * eval_polar(phi, x, q)
            assert p @ q <= value + 1e-12


def test_polar_is_attained(elliptic_2d):
    q = np.array([0.3, -1.2])
    metric = elliptic_2d.metric[2, 3]
    p = np.linalg.solve(metric, q)
    p /= eval_phi(elliptic_2d, (2, 3), p)
    assert p @ q == pytest.approx(eval_polar(elliptic_2d, (2, 3), q))


def test_homogeneity(rng, elliptic_2d):
    p = rng.normal(size=2)
    assert eval_phi(elliptic_2d, (1, 1), 2.5 * p) == pytest.approx(
        2.5 * eval_phi(elliptic_2d, (1, 1), p)
    )
    assert eval_phi(elliptic_2d, (1, 1), np.zeros(2)) == 0.0


def test_phi_gradient_matches_finite_differences(rng, elliptic_2d):
    p = rng.normal(size=2)
    grad = phi_gradient(elliptic_2d, (4, 4), p)
    eps = 1e-6
    for a in range(2):
        step = np.zeros(2)
        step[a] = eps
        fd = (
            eval_phi(elliptic_2d, (4, 4), p + step)
            - eval_phi(elliptic_2d, (4, 4), p - step)
        ) / (2 * eps)
        assert grad[a] == pytest.approx(fd, rel=1e-5)
    np.testing.assert_array_equal(
        phi_gradient(elliptic_2d, (4, 4), np.zeros(2)), np.zeros(2)
    )


@pytest.mark.parametrize("norm", ["euclidean", "manhattan"])
def test_projection_is_feasible(rng, weighted_2d, norm):
    z = rng.normal(0, 10, size=(2, 8, 8))
    projected = weighted_2d.project(z, norm)
    assert np.max(weighted_2d.polar_density(projected, norm)) <= 1 + 1e-12
    assert not np.any(projected[~weighted_2d.grid.edge_mask()])


def test_elliptic_projection(rng, elliptic_2d):
    z = rng.normal(0, 10, size=(2, 8, 8))
    projected = elliptic_2d.project(z)
    assert np.max(elliptic_2d.polar_density(projected)) <= 1 + 1e-9
    # feasible fields are left alone
    inside = elliptic_2d.project(0.01 * z)
    again = elliptic_2d.project(inside)
    np.testing.assert_allclose(again, inside, atol=1e-12)


def test_scaled(weighted_2d, rng):
    grad = rng.normal(size=(2, 8, 8))
    scaled = weighted_2d.scaled(3.0)
    np.testing.assert_allclose(
        scaled.density(grad), 3.0 * weighted_2d.density(grad)
    )
    with pytest.raises(ValueError):
        weighted_2d.scaled(0.0)


def test_invalid_integrands(grid_1d, elliptic_2d):
    with pytest.raises(ValueError):
        FinslerIntegrand.elliptic(grid_1d, 1.0, [[1.0]])
    with pytest.raises(ValueError):
        FinslerIntegrand.elliptic(
            Grid(shape=(3, 3), spacing=1.0), 1.0, [[1.0, 2.0], [2.0, 1.0]]
        )
    with pytest.raises(ValueError):
        elliptic_2d.density(np.zeros((2, 8, 8)), "manhattan")
    with pytest.raises(ValueError):
        FinslerIntegrand.from_edge_weights(grid_1d, np.ones(3))


def test_polar_of_a_diagonal_metric():
    grid = Grid(shape=(4, 4), spacing=1.0)
    phi = FinslerIntegrand.elliptic(grid, 1.0, np.diag([4.0, 1.0]))
    assert eval_polar(phi, (0, 0), [1.0, 0.0]) == pytest.approx(0.5)
    assert eval_polar(phi, (0, 0), [0.0, 1.0]) == pytest.approx(1.0)
    assert eval_phi(phi, (0, 0), [1.0, 0.0]) == pytest.approx(2.0)
