import numpy as np
import pytest
from weighted_tv.backend.fidelity import FidelityTerm
from weighted_tv.backend.grid import Grid, ScalarField
from weighted_tv.backend.integrands import FinslerIntegrand
from weighted_tv.backend.solve import minimize
from weighted_tv.backend.solver_1d import (
    PiecewiseQuadratic,
    SizeLimitError,
    brute_force_1d,
    energy_1d,
    extrema_flat_zones,
    flat_zone_report,
    solve_1d_exact,
)
from weighted_tv.example_data import sine, unit_interval_grid


def test_exact_never_worse_than_brute_force(rng):
    values = np.linspace(0, 1, 17)
    for _ in range(200):
        n = int(rng.integers(2, 6))
        grid = Grid(shape=(n,), spacing=float(rng.uniform(0.2, 1.0)))
        g = ScalarField(grid=grid, values=rng.choice(values, size=n))
        weights = rng.uniform(0.05, 1.0, size=n - 1)
        psi = FidelityTerm.quadratic(g)
        u = solve_1d_exact(g, weights, psi)
        _, brute = brute_force_1d(g, weights, psi, values)
        assert energy_1d(u.values, weights, psi) <= brute + 1e-10


def test_brute_force_finds_the_exact_minimizer_on_its_grid():
    # two samples: the minimizer moves both values halfway by w / h
    grid = Grid(shape=(2,), spacing=1.0)
    g = ScalarField(grid=grid, values=[0.0, 1.0])
    u = solve_1d_exact(g, 0.25)
    np.testing.assert_allclose(u.values, [0.25, 0.75])
    best, energy = brute_force_1d(g, 0.25, None, np.linspace(0, 1, 5))
    np.testing.assert_allclose(best.values, [0.25, 0.75])
    psi = FidelityTerm.quadratic(g)
    assert energy == pytest.approx(energy_1d(u.values, np.array([0.25]), psi))


def test_large_weight_gives_the_mean(rng, grid_1d):
    g = ScalarField(grid=grid_1d, values=rng.normal(size=grid_1d.shape))
    u = solve_1d_exact(g, 1e6)
    np.testing.assert_allclose(u.values, np.mean(g.values), atol=1e-8)


def test_small_weight_keeps_the_datum(rng, grid_1d):
    g = ScalarField(grid=grid_1d, values=rng.normal(size=grid_1d.shape))
    u = solve_1d_exact(g, 1e-12)
    np.testing.assert_allclose(u.values, g.values, atol=1e-9)


def test_constant_input(grid_1d):
    g = ScalarField.constant(grid_1d, 0.7)
    u = solve_1d_exact(g, 0.3)
    np.testing.assert_allclose(u.values, 0.7)


@pytest.mark.parametrize("q", [1.5, 2.0, 3.0])
def test_exact_solution_is_certified(rng, grid_1d, q):
    g = ScalarField(grid=grid_1d, values=rng.normal(size=grid_1d.shape))
    phi = FinslerIntegrand.weighted(grid_1d, 0.02)
    psi = FidelityTerm.power(g, q)
    u, report = minimize(phi, psi)
    assert report.method == "exact-1d"
    assert report.relative_gap < 1e-6


def test_exact_solver_rejects_bad_input(grid_1d, grid_2d):
    g = ScalarField.constant(grid_1d, 0.0)
    with pytest.raises(ValueError):
        solve_1d_exact(g, -1.0)
    with pytest.raises(ValueError):
        solve_1d_exact(ScalarField.constant(grid_2d, 0.0), 1.0)
    periodic = Grid(shape=(5,), spacing=1.0, boundary="periodic")
    with pytest.raises(ValueError):
        solve_1d_exact(ScalarField.constant(periodic, 0.0), 1.0)


def test_brute_force_size_limit():
    g = ScalarField.constant(Grid(shape=(7,), spacing=1.0), 0.0)
    with pytest.raises(SizeLimitError):
        brute_force_1d(g, 1.0, None, [0.0, 1.0])


def test_piecewise_quadratic():
    f = PiecewiseQuadratic(1.0, -2.0, 1.0)  # (t - 1)²
    assert f.argmin() == pytest.approx(1.0)
    assert f.is_convex()
    lower, upper = f.clip_derivative(0.5)
    assert (lower, upper) == pytest.approx((0.75, 1.25))
    assert f.derivative(10.0) == pytest.approx(0.5)


def test_flat_zones():
    grid = Grid(shape=(6,), spacing=1.0)
    u = ScalarField(grid=grid, values=[0.0, 0.0, 1.0, 1.0, 1.0, 2.0])
    zones = flat_zone_report(u)
    assert [(z.start, z.stop) for z in zones] == [(0, 2), (2, 5)]
    assert zones[1].level == 1.0
    assert zones[1].contains(4) and not zones[1].contains(5)
    assert len(flat_zone_report(u, min_length=1)) == 3
    with pytest.raises(ValueError):
        flat_zone_report(u, tol=-1.0)


def test_extrema_sit_in_flat_zones():
    g = sine(unit_interval_grid(200))
    u = solve_1d_exact(g, 0.05)
    summary = extrema_flat_zones(g, u)
    assert summary.passed
    peak = next(z for z in summary.zones if z.contains(summary.argmax_g))
    assert peak.length > 10


def test_brute_force_agrees_with_the_exact_solver_on_a_bump():
    grid = Grid(shape=(3,), spacing=1.0)
    g = ScalarField(grid=grid, values=[0.0, 2.0, 0.0])
    u = solve_1d_exact(g, 0.5)
    np.testing.assert_allclose(u.values, [0.5, 1.0, 0.5], atol=1e-10)
    step = 0.05
    best, _ = brute_force_1d(g, 0.5, None, np.arange(0.0, 2.0 + step, step))
    assert np.max(np.abs(best.values - u.values)) <= step + 1e-12
