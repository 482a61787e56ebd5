import numpy as np
import pytest
from weighted_tv.backend.fidelity import FidelityTerm
from weighted_tv.backend.grid import Grid, ScalarField
from weighted_tv.backend.integrands import FinslerIntegrand
from weighted_tv.backend.levelset import (
    TIE_TOL,
    BinaryField,
    LevelSetFamily,
    SizeLimitError,
    all_subsets,
    check_layer_cake,
    check_nested,
    exhaustive_geometric_minimum,
    geometric_energy,
    max_submodularity_excess,
    mincut_solve,
    nesting_violations,
    submodularity_gap,
    sup_error_bound,
    superlevel,
    untied_levels,
    verify_levelset_characterization,
    weighted_perimeter,
)
from weighted_tv.backend.solve import solve_pd
from weighted_tv.backend.solver_params import SolverParams


@pytest.fixture
def small_problem(rng):
    grid = Grid(shape=(4, 4), spacing=1.0)
    w = ScalarField(grid=grid, values=rng.uniform(0.2, 1.0, grid.shape))
    g = ScalarField(grid=grid, values=rng.uniform(0, 1, grid.shape))
    return FinslerIntegrand.weighted(grid, w), FidelityTerm.quadratic(g)


def test_mincut_matches_exhaustive_search(small_problem):
    phi, psi = small_problem
    for t in np.linspace(0.05, 0.95, 7):
        cut = mincut_solve(phi, psi, t)
        best = exhaustive_geometric_minimum(phi, psi, t)
        assert geometric_energy(cut, phi, psi, t) == pytest.approx(
            best.energy, abs=1e-9
        )
        assert cut == best.minimal
        assert best.minimal.issubset(best.maximal)


def test_mincut_extreme_levels(small_problem):
    phi, psi = small_problem
    assert mincut_solve(phi, psi, -1.0) == BinaryField.full(phi.grid)
    assert mincut_solve(phi, psi, 2.0) == BinaryField.empty(phi.grid)


def test_mincut_family_is_nested(small_problem):
    phi, psi = small_problem
    family = LevelSetFamily.from_mincut(phi, psi, np.linspace(0, 1, 11))
    assert check_nested(family)
    assert nesting_violations(family) == []
    spread = LevelSetFamily.from_mincut(
        phi, psi, np.linspace(0, 1, 11), max_workers=2
    )
    assert spread.sets == family.sets


def test_superlevels_of_a_minimizer_solve_the_geometric_problem(
    smooth_2d, weighted_2d
):
    phi = weighted_2d.scaled(0.05)
    psi = FidelityTerm.quadratic(smooth_2d)
    params = SolverParams(gradient_norm="manhattan", gap_tol=1e-8)
    u, report = solve_pd(phi, psi, params)
    levels = np.linspace(u.values.min(), u.values.max(), 9)[1:-1]
    result = verify_levelset_characterization(
        u, phi, psi, levels, gap=report.gap
    )
    assert result.nested
    assert result.passed
    assert len(result.records) == 7


def test_reconstruct():
    grid = Grid(shape=(3,), spacing=1.0)
    u = ScalarField(grid=grid, values=[0.0, 1.0, 2.0])
    family = LevelSetFamily.from_superlevels(u, [-0.5, 0.5, 1.5])
    assert check_nested(family)
    np.testing.assert_allclose(family.reconstruct().values, [-0.5, 0.5, 1.5])
    with pytest.raises(ValueError):
        LevelSetFamily(levels=[], sets=[]).reconstruct()


def test_family_validation(grid_2d):
    empty, full = BinaryField.empty(grid_2d), BinaryField.full(grid_2d)
    with pytest.raises(ValueError):
        LevelSetFamily(levels=[1.0, 0.0], sets=[full, empty])
    with pytest.raises(ValueError):
        LevelSetFamily(levels=[0.0], sets=[full, empty])
    growing = LevelSetFamily(levels=[0.0, 1.0], sets=[empty, full])
    assert nesting_violations(growing) == [(0.0, 1.0)]
    assert not check_nested(growing)


def test_perimeter_is_submodular(rng, weighted_2d):
    grid = weighted_2d.grid
    for _ in range(50):
        E = BinaryField(grid=grid, membership=rng.random(grid.shape) < 0.5)
        F = BinaryField(grid=grid, membership=rng.random(grid.shape) < 0.5)
        assert submodularity_gap(E, F, weighted_2d) >= -1e-12


def test_exhaustive_submodularity():
    grid = Grid(shape=(3, 3), spacing=1.0)
    w = ScalarField(
        grid=grid,
        values=np.random.default_rng(5).uniform(0.5, 2.0, grid.shape),
    )
    phi = FinslerIntegrand.weighted(grid, w)
    assert max_submodularity_excess(phi) <= 1e-12


def test_perimeter_of_complement(rng, weighted_2d):
    grid = weighted_2d.grid
    E = BinaryField(grid=grid, membership=rng.random(grid.shape) < 0.3)
    assert weighted_perimeter(E, weighted_2d) == pytest.approx(
        weighted_perimeter(E.complement(), weighted_2d)
    )
    assert weighted_perimeter(BinaryField.full(grid), weighted_2d) == 0.0


def test_binary_field_operations(half_plane_2d):
    right = superlevel(half_plane_2d, 0.5)
    left = right.complement()
    assert right.count == 32
    assert (right & left).count == 0
    assert (right | left) == BinaryField.full(right.grid)
    assert (right & left).issubset(right)
    assert not right.issubset(left)
    np.testing.assert_array_equal(
        right.indicator().values, half_plane_2d.values
    )
    with pytest.raises(ValueError):
        BinaryField(grid=right.grid, membership=np.zeros((3, 3)))


def test_size_limits_and_elliptic(grid_2d, elliptic_2d, quadratic):
    with pytest.raises(SizeLimitError):
        all_subsets(FinslerIntegrand.isotropic(grid_2d))
    with pytest.raises(ValueError):
        mincut_solve(elliptic_2d, quadratic, 0.0)


@pytest.fixture
def manhattan_solve(smooth_2d, weighted_2d):
    phi = weighted_2d.scaled(0.05)
    psi = FidelityTerm.quadratic(smooth_2d)
    params = SolverParams(gradient_norm="manhattan", gap_tol=1e-8)
    u, report = solve_pd(phi, psi, params)
    assert report.converged
    return u, phi, psi, report.gap


def test_layer_cake_matches_the_solve(manhattan_solve):
    u, phi, psi, gap = manhattan_solve
    g = psi.g.values
    levels = np.linspace(g.min(), g.max(), 256)
    spacing = levels[1] - levels[0]
    v = LevelSetFamily.from_mincut(phi, psi, levels).reconstruct()
    tolerance = max(spacing, 1e-3) + sup_error_bound(psi, gap)
    assert np.max(np.abs(v.values - u.values)) <= tolerance

    report = check_layer_cake(u, phi, psi, gap=gap)
    assert report.passed
    assert report.levels == 256
    assert report.spacing == pytest.approx(spacing)
    assert report.tolerance == pytest.approx(tolerance)
    with pytest.raises(ValueError):
        check_layer_cake(u, phi, psi, count=1)


def test_near_tie_level_is_flagged_and_moved(manhattan_solve):
    u, phi, psi, gap = manhattan_solve
    tied = float(u.values[3, 4])
    result = verify_levelset_characterization(u, phi, psi, [tied], gap=gap)
    (record,) = result.records
    assert record.tie_prone
    assert result.tie_prone_levels == [tied]

    margin = max(sup_error_bound(psi, gap), TIE_TOL)
    (moved,) = untied_levels(u, [tied], margin)
    assert np.min(np.abs(u.values - moved)) > margin
    result = verify_levelset_characterization(u, phi, psi, [moved], gap=gap)
    (record,) = result.records
    assert not record.tie_prone
    assert record.excess <= 1e-5
    assert result.passed


def test_untied_levels():
    grid = Grid(shape=(4,), spacing=1.0)
    u = ScalarField(grid=grid, values=[0.0, 0.5, 0.5, 1.0])
    assert untied_levels(u, [0.5, 0.3, 2.0], 0.01) == [0.25, 0.3, 2.0]
    assert untied_levels(u, [0.5, 0.3, 2.0], 0.3) == [2.0]
    assert untied_levels(u, [0.45, 0.48], 0.1) == [0.25]


def test_perimeter_of_a_single_cell():
    grid = Grid(shape=(4, 4), spacing=1.0)
    membership = np.zeros(grid.shape, dtype=bool)
    membership[1, 1] = True
    E = BinaryField(grid=grid, membership=membership)
    phi = FinslerIntegrand.weighted(grid, 1.0)
    assert weighted_perimeter(E, phi) == pytest.approx(4.0)
