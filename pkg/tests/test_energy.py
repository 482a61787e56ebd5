import json

import numpy as np
import pytest
from weighted_tv.backend.energy import (
    InfeasibleDualError,
    anisotropic_tv,
    breakpoint_levels,
    coarea_quadrature,
    dual_lower_bound,
    total_energy,
)
from weighted_tv.backend.fidelity import FidelityTerm
from weighted_tv.backend.grid import ScalarField, VectorField
from weighted_tv.backend.integrands import FinslerIntegrand
from weighted_tv.example_data import (
    piecewise_constant_random,
    sine,
    unit_interval_grid,
)


def test_tv_of_constant_is_zero(grid_2d, weighted_2d):
    u = ScalarField.constant(grid_2d, 3.0)
    assert anisotropic_tv(u, weighted_2d) == 0.0
    assert anisotropic_tv(u, weighted_2d, "manhattan") == 0.0


def test_tv_of_step(step_1d):
    phi = FinslerIntegrand.weighted(step_1d.grid, 2.0)
    assert anisotropic_tv(step_1d, phi) == pytest.approx(2.0)


@pytest.mark.parametrize("norm", ["euclidean", "manhattan"])
def test_tv_of_half_plane(half_plane_2d, norm):
    # a unit jump across a vertical line of length 1
    phi = FinslerIntegrand.isotropic(half_plane_2d.grid)
    assert anisotropic_tv(half_plane_2d, phi, norm) == pytest.approx(1.0)


def test_total_energy(smooth_2d, weighted_2d):
    psi = FidelityTerm.quadratic(smooth_2d)
    u = ScalarField.constant(smooth_2d.grid, 0.0)
    energy = total_energy(u, weighted_2d, psi)
    assert energy.tv_term == 0.0
    expected = 0.5 * np.sum(smooth_2d.values**2) * smooth_2d.grid.cell_measure
    assert energy.fidelity_term == pytest.approx(expected)
    assert energy.total == pytest.approx(energy.tv_term + energy.fidelity_term)
    assert set(json.loads(energy.to_json())) == {"tv", "fidelity", "total"}


@pytest.mark.parametrize("norm", ["euclidean", "manhattan"])
def test_dual_lower_bound(rng, smooth_2d, weighted_2d, norm):
    tv = anisotropic_tv(smooth_2d, weighted_2d, norm)
    for _ in range(100):
        z = weighted_2d.project(rng.normal(0, 5, size=(2, 8, 8)), norm)
        field = VectorField(grid=smooth_2d.grid, values=z)
        bound = dual_lower_bound(smooth_2d, field, weighted_2d, norm)
        assert bound <= tv + 1e-12


def test_infeasible_dual_is_rejected(smooth_2d, weighted_2d):
    values = np.zeros((2, 8, 8))
    values[1, 3, 2] = 100.0
    z = VectorField(grid=smooth_2d.grid, values=values)
    with pytest.raises(InfeasibleDualError) as error:
        dual_lower_bound(smooth_2d, z, weighted_2d)
    assert error.value.location == (3, 2)


@pytest.mark.parametrize("seed", range(5))
def test_coarea_is_exact_for_piecewise_constant(grid_2d, weighted_2d, seed):
    u = piecewise_constant_random(grid_2d, seed=seed, n_values=5)
    levels = breakpoint_levels(u)
    quadrature = coarea_quadrature(u, weighted_2d, levels, "manhattan")
    tv = anisotropic_tv(u, weighted_2d, "manhattan")
    assert quadrature == pytest.approx(tv, abs=1e-10)


def test_coarea_converges_for_smooth_1d():
    u = sine(unit_interval_grid(32))
    phi = FinslerIntegrand.isotropic(u.grid)
    levels = np.linspace(u.values.min() - 0.01, u.values.max() + 0.01, 1000)
    quadrature = coarea_quadrature(u, phi, levels)
    assert quadrature == pytest.approx(anisotropic_tv(u, phi), rel=5e-3)


def test_coarea_rejects_bad_levels(smooth_2d, weighted_2d):
    with pytest.raises(ValueError):
        coarea_quadrature(smooth_2d, weighted_2d, [])
    with pytest.raises(ValueError):
        coarea_quadrature(smooth_2d, weighted_2d, [1.0, 0.0])
