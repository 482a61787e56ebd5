"""Property suites behind ``weighted-tv verify``.

Every suite draws its random instances from ``numpy.random.default_rng``
seeded with (seed, suite index), so a suite reproduces on its own regardless
of which other suites run with it. A suite never raises for a failed
property: it returns a :class:`SuiteVerdict` whose checks carry the numbers
that decided them.
"""

from __future__ import annotations

import logging
import time
from typing import Any, Callable

import numpy as np
from pydantic import BaseModel, Field, computed_field

from ..example_data import (
    cos_stripe,
    piecewise_constant_random,
    ramp,
    sine,
    smooth_random,
    staircase,
    stripe_grid,
    unit_interval_grid,
)
from .energy import (
    anisotropic_tv,
    breakpoint_levels,
    coarea_quadrature,
    dual_lower_bound,
)
from .fidelity import FidelityTerm
from .grid import Grid, ScalarField, VectorField
from .integrands import FinslerIntegrand
from .jumps import (
    check_contrast_decrease,
    check_jump_inclusion,
    default_threshold,
    detect_jumps,
    epsilon_jump_inclusion_check,
    interface_bump_fraction,
    lambda_rate_check,
    lambda_stability_check,
    weight_gradient_jumps,
)
from .levelset import (
    TIE_TOL,
    BinaryField,
    LevelSetFamily,
    check_layer_cake,
    check_nested,
    exhaustive_geometric_minimum,
    geometric_energy,
    max_submodularity_excess,
    mincut_solve,
    submodularity_gap,
    sup_error_bound,
    untied_levels,
    verify_levelset_characterization,
    weighted_perimeter,
)
from .solve import NotConvergedError, solve_pd, solve_rof
from .solver_params import SolverParams

logger = logging.getLogger(__name__)

SUITES = (
    "coarea",
    "duality",
    "nestedness",
    "levelset",
    "inclusion",
    "contrast",
    "lambda",
)


class UnknownSuiteError(ValueError):
    """Raised for a suite name outside SUITES and "all"."""


class VerifyOptions(BaseModel):
    """Sizes and tolerances of the property suites."""

    seed: int = Field(
        0, title="Seed", description="Seed of every randomized instance."
    )
    instances: int = Field(
        20,
        ge=1,
        title="Random instances",
        description="Random instances per randomized solver check.",
    )
    exhaustive_instances: int = Field(
        10,
        ge=1,
        title="Exhaustive instances",
        description="Random grids of at most 16 cells solved by enumeration.",
    )
    dual_samples: int = Field(
        10000,
        ge=1,
        title="Dual samples",
        description="Random feasible dual fields per duality check.",
    )
    gap_tol: float = Field(
        1e-8,
        gt=0,
        title="Gap tolerance",
        description="Relative duality gap of the solves inside the suites.",
    )
    stripe_size: int = Field(
        256,
        ge=16,
        title="Stripe size",
        description="Side of the periodic grid of the stripe experiment.",
    )
    stripe_lambda: float = Field(
        0.5,
        gt=0,
        title="Stripe weight",
        description="Constant weight of the stripe experiment.",
    )
    stripe_gap_tol: float = Field(
        1e-6,
        gt=0,
        title="Stripe gap tolerance",
        description="Relative duality gap of the stripe solve.",
    )
    contrast_tolerance: float = Field(
        1e-3,
        ge=0,
        title="Contrast tolerance",
        description="Allowed excess of a jump of u over the matched jump "
        "of g.",
    )
    radius: int = Field(
        1,
        ge=0,
        title="Matching radius",
        description="Jump matching radius in edges.",
    )
    max_workers: int = Field(
        1,
        ge=1,
        title="Workers",
        description="Processes for the per-level min-cut solves.",
    )


class CheckResult(BaseModel):
    name: str
    passed: bool
    informational: bool = Field(
        False, description="Reported only; does not decide the suite."
    )
    details: dict[str, Any] = {}


class SuiteVerdict(BaseModel):
    suite: str
    seed: int
    checks: list[CheckResult]
    wall_time: float

    @computed_field
    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if not c.informational)


def _rng(options: VerifyOptions, suite: str) -> np.random.Generator:
    return np.random.default_rng([options.seed, SUITES.index(suite)])


def _seed(rng: np.random.Generator) -> int:
    return int(rng.integers(2**31))


def _params(options: VerifyOptions, **update) -> SolverParams:
    return SolverParams(gap_tol=options.gap_tol, **update)


def _random_grid(rng: np.random.Generator, max_side: int, ndim: int) -> Grid:
    shape = tuple(int(n) for n in rng.integers(2, max_side + 1, size=ndim))
    return Grid(shape=shape, spacing=float(rng.uniform(0.5, 2.0)))


def _small_grid(rng: np.random.Generator) -> Grid:
    """A random grid with at most 16 cells."""
    shapes = [(2, 2), (2, 3), (3, 3), (2, 4), (3, 4), (4, 4), (8,), (12,)]
    shape = shapes[int(rng.integers(len(shapes)))]
    return Grid(shape=shape, spacing=1.0)


def _random_weight(
    rng: np.random.Generator, grid: Grid, low: float = 0.5, high: float = 2.0
) -> ScalarField:
    return ScalarField(grid=grid, values=rng.uniform(low, high, grid.shape))


def _random_set(rng: np.random.Generator, grid: Grid) -> BinaryField:
    return BinaryField(grid=grid, membership=rng.random(grid.shape) < 0.5)


# -- coarea -------------------------------------------------------------------


def _coarea_suite(options: VerifyOptions) -> list[CheckResult]:
    rng = _rng(options, "coarea")
    worst = 0.0
    for k in range(50):
        grid = _random_grid(rng, 40 if k % 2 else 10, 1 if k % 2 else 2)
        u = piecewise_constant_random(
            grid,
            seed=_seed(rng),
            n_values=int(rng.integers(1, 9)),
            blocks=int(rng.integers(2, 6)),
        )
        phi = FinslerIntegrand.weighted(grid, _random_weight(rng, grid))
        levels = breakpoint_levels(u)
        error = abs(
            coarea_quadrature(u, phi, levels, "manhattan")
            - anisotropic_tv(u, phi, "manhattan")
        )
        worst = max(worst, error)
    checks = [
        CheckResult(
            name="piecewise_constant_exact",
            passed=worst <= 1e-10,
            details={"instances": 50, "max_abs_error": worst},
        )
    ]

    grid = Grid(shape=(24, 24), spacing=1.0)
    E = _random_set(rng, grid)
    phi = FinslerIntegrand.weighted(grid, _random_weight(rng, grid))
    error = abs(
        coarea_quadrature(E.indicator(), phi, [-0.5, 0.5, 1.5])
        - anisotropic_tv(E.indicator(), phi)
    )
    checks.append(
        CheckResult(
            name="binary_euclidean_exact",
            passed=error <= 1e-12,
            details={"abs_error": error},
        )
    )

    grid = unit_interval_grid(32)
    u = sine(grid)
    phi = FinslerIntegrand.isotropic(grid)
    margin = 1e-3 * float(np.ptp(u.values))
    levels = np.linspace(
        u.values.min() - margin, u.values.max() + margin, 1000
    )
    tv = anisotropic_tv(u, phi)
    relative = abs(coarea_quadrature(u, phi, levels) - tv) / tv
    ramp_field = ScalarField(grid=Grid(shape=(3,)), values=[0.0, 0.5, 1.0])
    ramp_error = abs(
        coarea_quadrature(
            ramp_field,
            FinslerIntegrand.isotropic(ramp_field.grid),
            np.linspace(0.0, 1.0, 1002)[1:-1],
        )
        - 1.0
    )
    checks.append(
        CheckResult(
            name="smooth_refinement",
            passed=relative <= 5e-3 and ramp_error <= 2e-3,
            details={
                "levels": 1000,
                "relative_error": relative,
                "ramp_abs_error": ramp_error,
            },
        )
    )
    return checks


# -- duality ------------------------------------------------------------------


def _duality_suite(options: VerifyOptions) -> list[CheckResult]:
    rng = _rng(options, "duality")
    grid = Grid(shape=(8, 8), spacing=0.5)
    u = smooth_random(grid, seed=_seed(rng))
    u = u.with_values(u.values + 0.1 * rng.normal(size=grid.shape))
    weight = _random_weight(rng, grid)
    integrands = {
        "weighted": (FinslerIntegrand.weighted(grid, weight), "euclidean"),
        "manhattan": (FinslerIntegrand.weighted(grid, weight), "manhattan"),
        "elliptic": (
            FinslerIntegrand.elliptic(grid, weight, [[2.0, 0.5], [0.5, 1.0]]),
            "euclidean",
        ),
    }
    checks = []
    for name, (phi, norm) in integrands.items():
        tv = anisotropic_tv(u, phi, norm)
        best = -np.inf
        for _ in range(options.dual_samples):
            scale = rng.uniform(0.1, 3.0)
            raw = scale * rng.normal(size=(grid.ndim, *grid.shape))
            z = VectorField(grid=grid, values=phi.project(raw, norm))
            best = max(best, dual_lower_bound(u, z, phi, norm))
        checks.append(
            CheckResult(
                name=f"random_dual_below_tv_{name}",
                passed=best <= tv + 1e-9,
                details={
                    "samples": options.dual_samples,
                    "max_lower_bound": best,
                    "tv": tv,
                },
            )
        )

    worst = 0.0
    unconverged = 0
    for _ in range(3):
        grid = Grid(shape=(16, 16), spacing=1.0 / 16)
        g = smooth_random(grid, seed=_seed(rng))
        w = _random_weight(rng, grid, 0.05, 0.2)
        phi = FinslerIntegrand.weighted(grid, w)
        _, report = solve_pd(phi, FidelityTerm.quadratic(g), _params(options))
        unconverged += not report.converged
        worst = max(worst, report.relative_gap)
    checks.append(
        CheckResult(
            name="solver_certificate",
            passed=unconverged == 0 and worst <= options.gap_tol,
            details={"max_relative_gap": worst, "unconverged": unconverged},
        )
    )
    return checks


# -- nestedness and comparison ------------------------------------------------


def _nestedness_suite(options: VerifyOptions) -> list[CheckResult]:
    rng = _rng(options, "nestedness")
    violations = 0
    for _ in range(options.instances):
        grid = Grid(shape=(8, 8), spacing=1.0)
        g = ScalarField(grid=grid, values=rng.random(grid.shape))
        w = _random_weight(rng, grid, 0.05, 0.3)
        phi = FinslerIntegrand.weighted(grid, w)
        levels = np.linspace(0.0, 1.0, 18)[1:-1]
        family = LevelSetFamily.from_mincut(
            phi, FidelityTerm.quadratic(g), levels, options.max_workers
        )
        violations += not check_nested(family)
        family = LevelSetFamily.from_superlevels(g, levels)
        violations += not check_nested(family)
    checks = [
        CheckResult(
            name="mincut_families_nested",
            passed=violations == 0,
            details={
                "families": 2 * options.instances,
                "violations": violations,
            },
        )
    ]

    pair_violations = 0
    for _ in range(options.exhaustive_instances):
        grid = _small_grid(rng)
        g = ScalarField(grid=grid, values=rng.random(grid.shape))
        w = _random_weight(rng, grid, 0.05, 0.3)
        phi = FinslerIntegrand.weighted(grid, w)
        psi = FidelityTerm.quadratic(g)
        t1, t2 = np.sort(rng.uniform(-0.1, 1.1, size=2))
        low = exhaustive_geometric_minimum(phi, psi, float(t1))
        high = exhaustive_geometric_minimum(phi, psi, float(t2))
        pair_violations += not high.minimal.issubset(low.minimal)
        pair_violations += not high.maximal.issubset(low.maximal)
    checks.append(
        CheckResult(
            name="exhaustive_comparison",
            passed=pair_violations == 0,
            details={
                "instances": options.exhaustive_instances,
                "violations": pair_violations,
            },
        )
    )

    grid = Grid(shape=(12,), spacing=1.0)
    phi = FinslerIntegrand.weighted(grid, _random_weight(rng, grid))
    excess_1d = max_submodularity_excess(phi)
    worst_2d = -np.inf
    worst_complement = 0.0
    for _ in range(200):
        grid = _random_grid(rng, 6, 2)
        phi = FinslerIntegrand.weighted(grid, _random_weight(rng, grid))
        E, F = _random_set(rng, grid), _random_set(rng, grid)
        worst_2d = max(worst_2d, -submodularity_gap(E, F, phi))
        worst_complement = max(
            worst_complement,
            abs(
                weighted_perimeter(E, phi)
                - weighted_perimeter(E.complement(), phi)
            ),
        )
    checks.append(
        CheckResult(
            name="submodular_perimeter",
            passed=excess_1d <= 1e-12 and worst_2d <= 1e-12,
            details={"max_excess_1d": excess_1d, "max_excess_2d": worst_2d},
        )
    )
    checks.append(
        CheckResult(
            name="complement_symmetry",
            passed=worst_complement <= 1e-12,
            details={"max_abs_difference": worst_complement},
        )
    )
    return checks


# -- level sets ---------------------------------------------------------------


def _levelset_suite(options: VerifyOptions) -> list[CheckResult]:
    rng = _rng(options, "levelset")
    params = _params(options, gradient_norm="manhattan")
    failed = 0
    unconverged = 0
    tie_prone = 0
    checked_levels = 0
    worst_excess = 0.0
    cake_error = 0.0
    cake_failed = 0
    for _ in range(options.instances):
        grid = Grid(shape=(8, 8), spacing=1.0)
        g = ScalarField(grid=grid, values=rng.random(grid.shape))
        w = _random_weight(rng, grid, 0.05, 0.3)
        phi = FinslerIntegrand.weighted(grid, w)
        psi = FidelityTerm.quadratic(g)
        u, report = solve_pd(phi, psi, params)
        unconverged += not report.converged
        # levels within reach of a value of u cannot be decided by the solve
        margin = max(sup_error_bound(psi, report.gap), TIE_TOL)
        levels = untied_levels(
            u, np.linspace(g.values.min(), g.values.max(), 18)[1:-1], margin
        )
        result = verify_levelset_characterization(
            u, phi, psi, levels, report.gap, options.max_workers
        )
        failed += not result.passed
        tie_prone += len(result.tie_prone_levels)
        checked_levels += len(result.records)
        worst_excess = max(worst_excess, result.max_excess)
        cake = check_layer_cake(
            u, phi, psi, gap=report.gap, max_workers=options.max_workers
        )
        cake_failed += not cake.passed
        cake_error = max(cake_error, cake.sup_error)
    checks = [
        CheckResult(
            name="superlevel_sets_minimize",
            passed=failed == 0
            and unconverged == 0
            and tie_prone == 0
            and worst_excess <= 1e-5,
            details={
                "instances": options.instances,
                "levels": checked_levels,
                "failed": failed,
                "unconverged": unconverged,
                "tie_prone": tie_prone,
                "max_excess": worst_excess,
            },
        ),
        CheckResult(
            name="layer_cake_reconstruction",
            passed=cake_failed == 0 and unconverged == 0,
            details={
                "instances": options.instances,
                "failed": cake_failed,
                "max_sup_error": cake_error,
            },
        ),
    ]

    energy_error = 0.0
    mismatched = 0
    for _ in range(options.exhaustive_instances):
        grid = Grid(shape=(4, 4), spacing=1.0)
        g = ScalarField(grid=grid, values=rng.random(grid.shape))
        w = _random_weight(rng, grid, 0.05, 0.3)
        phi = FinslerIntegrand.weighted(grid, w)
        psi = FidelityTerm.quadratic(g)
        t = float(rng.uniform(0.0, 1.0))
        E = mincut_solve(phi, psi, t)
        oracle = exhaustive_geometric_minimum(phi, psi, t)
        energy_error = max(
            energy_error, abs(geometric_energy(E, phi, psi, t) - oracle.energy)
        )
        mismatched += not E == oracle.minimal
    checks.append(
        CheckResult(
            name="mincut_matches_enumeration",
            passed=energy_error <= 1e-9 and mismatched == 0,
            details={
                "instances": options.exhaustive_instances,
                "max_energy_error": energy_error,
                "minimal_set_mismatches": mismatched,
            },
        )
    )
    return checks


# -- jump inclusion -----------------------------------------------------------


def _inclusion_suite(options: VerifyOptions) -> list[CheckResult]:
    rng = _rng(options, "inclusion")
    radius = options.radius
    params = _params(options)

    g = ramp()
    grid = g.grid
    u, _ = solve_rof(g, "fig2_sqrt", params)
    threshold = default_threshold(g)
    Ju = detect_jumps(u, threshold)
    Jg = detect_jumps(g, threshold, source="g")
    Jw = weight_gradient_jumps("fig2_sqrt", grid)
    h = grid.spacing[0]
    created = [
        r
        for r in check_jump_inclusion(Ju, [Jg], radius).violations
        if abs(r.position[-1] - 1.0) <= (radius + 0.5) * h
    ]
    combined = check_jump_inclusion(Ju, [Jg, Jw], radius)
    checks = [
        CheckResult(
            name="kinked_weight_creates_jump",
            passed=bool(created) and combined.passed,
            details={
                "jumps": len(Ju),
                "created_near_kink": len(created),
                "violations_against_g_and_grad_w": len(combined.violations),
                "threshold": threshold,
            },
        )
    ]

    g = sine()
    u, _ = solve_rof(g, "smooth_sin", params, scale=0.05)
    threshold = default_threshold(g)
    report = check_jump_inclusion(
        detect_jumps(u, threshold),
        [detect_jumps(g, threshold, source="g")],
        radius,
    )
    checks.append(
        CheckResult(
            name="smooth_weight_no_new_jumps",
            passed=report.passed,
            details={
                "checked": report.checked,
                "violations": len(report.violations),
            },
        )
    )

    violations = 0
    for _ in range(options.instances // 2):
        g = piecewise_constant_random(
            unit_interval_grid(200), seed=_seed(rng), n_values=5, blocks=6
        )
        u, _ = solve_rof(g, float(rng.uniform(0.005, 0.05)), params)
        report = check_jump_inclusion(
            detect_jumps(u, 1e-6), [detect_jumps(g, 1e-6, source="g")], 0
        )
        violations += len(report.violations)
    checks.append(
        CheckResult(
            name="rof_piecewise_constant_inclusion",
            passed=violations == 0,
            details={
                "instances": options.instances // 2,
                "violations": violations,
            },
        )
    )

    smooth_params = _params(options).model_copy(
        update={"gap_tol": max(options.gap_tol, 1e-6)}
    )
    new_jumps = {"isotropic": 0, "elliptic": 0}
    for _ in range(10):
        grid = Grid(shape=(24, 24), spacing=1.0 / 24)
        g = smooth_random(grid, seed=_seed(rng))
        psi = FidelityTerm.quadratic(g)
        threshold = default_threshold(g)
        integrands = {
            "isotropic": FinslerIntegrand.weighted(grid, 0.05),
            "elliptic": FinslerIntegrand.elliptic(
                grid, 0.05, [[1.5, 0.3], [0.3, 0.8]]
            ),
        }
        for name, phi in integrands.items():
            u, _ = solve_pd(phi, psi, smooth_params)
            new_jumps[name] += len(detect_jumps(u, threshold))
    checks.append(
        CheckResult(
            name="smooth_data_no_jumps",
            passed=sum(new_jumps.values()) == 0,
            details={"seeds": 10, "jumps": new_jumps},
        )
    )
    return checks


# -- contrast -----------------------------------------------------------------


def _contrast_suite(options: VerifyOptions) -> list[CheckResult]:
    grid = stripe_grid(options.stripe_size)
    g = cos_stripe(grid)
    phi = FinslerIntegrand.weighted(grid, options.stripe_lambda)
    u, report = solve_pd(
        phi,
        FidelityTerm.quadratic(g),
        SolverParams(gap_tol=options.stripe_gap_tol),
    )
    threshold = default_threshold(g)
    Ju = detect_jumps(u, threshold)
    Jg = detect_jumps(g, threshold, source="g")
    contrast = check_contrast_decrease(
        Ju, Jg, options.contrast_tolerance, options.radius
    )
    inclusion = check_jump_inclusion(Ju, [Jg], options.radius)
    checks = [
        CheckResult(
            name="stripe_contrast_decrease",
            passed=report.converged and contrast.passed,
            details={
                "relative_gap": report.relative_gap,
                "matched": len(contrast.matches),
                "violations": len(contrast.violations),
                "unmatched": len(contrast.unmatched),
                "max_excess": contrast.max_excess,
                "threshold": threshold,
            },
        ),
        CheckResult(
            name="contrast_implies_inclusion",
            passed=inclusion.passed or not contrast.passed,
            details={"inclusion_violations": len(inclusion.violations)},
        ),
    ]
    n = options.stripe_size
    bumps = interface_bump_fraction(u, [n // 2, n - 1])
    checks.append(
        CheckResult(
            name="interface_bumps",
            passed=bumps.passed,
            informational=True,
            details=bumps.model_dump(),
        )
    )
    identity = check_contrast_decrease(
        Jg, Jg, options.contrast_tolerance, options.radius
    )
    checks.append(
        CheckResult(
            name="identity_contrast",
            passed=identity.passed,
            details={"matched": len(identity.matches)},
        )
    )
    return checks


# -- regularization weight ----------------------------------------------------


def _lambda_suite(options: VerifyOptions) -> list[CheckResult]:
    rng = _rng(options, "lambda")
    failed = []
    worst_ratio = 0.0
    for k in range(options.instances):
        if k % 2:
            grid = Grid(shape=(12, 12), spacing=1.0 / 12)
            g = smooth_random(grid, seed=_seed(rng))
        else:
            grid = unit_interval_grid(64)
            g = piecewise_constant_random(grid, seed=_seed(rng), n_values=4)
        lam = float(rng.uniform(0.02, 0.3))
        mu = lam * float(rng.uniform(0.5, 2.0))
        try:
            report = lambda_stability_check(g, lam, mu, options.gap_tol)
        except NotConvergedError as e:
            failed.append({"lam": lam, "mu": mu, "error": str(e)})
            continue
        if not report.passed:
            failed.append({"lam": lam, "mu": mu})
        if report.sup_bound > 0:
            worst_ratio = max(
                worst_ratio, report.sup_difference / report.sup_bound
            )
    checks = [
        CheckResult(
            name="stability_random_triples",
            passed=not failed,
            details={
                "instances": options.instances,
                "failed": failed,
                "max_difference_over_bound": worst_ratio,
            },
        )
    ]

    g = piecewise_constant_random(unit_interval_grid(64), seed=_seed(rng))
    same = lambda_stability_check(g, 0.1, 0.1, options.gap_tol)
    checks.append(
        CheckResult(
            name="stability_equal_weights",
            passed=same.passed and same.sup_bound == 0.0,
            details=same.model_dump(),
        )
    )

    epsilon, lam = 0.05, 0.1
    skipped = 0
    violations = 0
    for _ in range(10):
        g = staircase(unit_interval_grid(100), seed=_seed(rng))
        hypothesis = epsilon * lam / (2.0 * g.grid.measure * g.sup_norm)
        report = epsilon_jump_inclusion_check(
            g, lam, lam + 0.999 * hypothesis, epsilon, radius=options.radius
        )
        skipped += report.skipped
        violations += len(report.violations)
    checks.append(
        CheckResult(
            name="epsilon_jump_inclusion",
            passed=skipped == 0 and violations == 0,
            details={
                "instances": 10,
                "epsilon": epsilon,
                "skipped": skipped,
                "violations": violations,
            },
        )
    )

    g = piecewise_constant_random(
        unit_interval_grid(256), seed=_seed(rng), n_values=6, blocks=8
    )
    lambdas = [2.0**-k for k in range(9)]
    rate = lambda_rate_check(g, lambdas, _params(options))
    slack_ok = all(r.slack <= 0.01 * r.bound for r in rate.rows)
    checks.append(
        CheckResult(
            name="vanishing_weight_rate",
            passed=rate.passed and slack_ok,
            details={"rows": [r.model_dump() for r in rate.rows]},
        )
    )
    return checks


_SUITE_RUNNERS: dict[str, Callable[[VerifyOptions], list[CheckResult]]] = {
    "coarea": _coarea_suite,
    "duality": _duality_suite,
    "nestedness": _nestedness_suite,
    "levelset": _levelset_suite,
    "inclusion": _inclusion_suite,
    "contrast": _contrast_suite,
    "lambda": _lambda_suite,
}


def run_suite(name: str, options: VerifyOptions | None = None) -> SuiteVerdict:
    """Run one property suite.

    Raises:
        UnknownSuiteError: If ``name`` is not in SUITES.
    """
    if name not in _SUITE_RUNNERS:
        raise UnknownSuiteError(
            f"Unknown suite {name!r}, expected one of {[*SUITES, 'all']}"
        )
    options = options or VerifyOptions()
    logger.info("Running suite %s (seed %d)", name, options.seed)
    start_time = time.time()
    checks = _SUITE_RUNNERS[name](options)
    verdict = SuiteVerdict(
        suite=name,
        seed=options.seed,
        checks=checks,
        wall_time=time.time() - start_time,
    )
    for check in checks:
        if not check.passed:
            log = logger.info if check.informational else logger.warning
            log("Check %s.%s failed: %s", name, check.name, check.details)
    logger.info(
        "Suite %s %s in %.1f seconds",
        name,
        "passed" if verdict.passed else "FAILED",
        verdict.wall_time,
    )
    return verdict


def run_suites(
    name: str, options: VerifyOptions | None = None
) -> list[SuiteVerdict]:
    """Run one suite, or every suite for ``name == "all"``."""
    names = SUITES if name == "all" else (name,)
    return [run_suite(n, options) for n in names]
