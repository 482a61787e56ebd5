import pytest
from weighted_tv.backend.verification import (
    SUITES,
    CheckResult,
    SuiteVerdict,
    UnknownSuiteError,
    VerifyOptions,
    run_suite,
    run_suites,
)


@pytest.fixture
def small_options():
    return VerifyOptions(
        instances=2,
        exhaustive_instances=2,
        dual_samples=200,
        gap_tol=1e-6,
        stripe_size=32,
    )


def _failed(verdict):
    return [c.name for c in verdict.checks if not c.passed]


def test_unknown_suite():
    with pytest.raises(UnknownSuiteError):
        run_suite("bogus")
    with pytest.raises(UnknownSuiteError):
        run_suites("bogus")


def test_informational_checks_do_not_decide():
    verdict = SuiteVerdict(
        suite="contrast",
        seed=0,
        wall_time=0.0,
        checks=[
            CheckResult(name="a", passed=True),
            CheckResult(name="b", passed=False, informational=True),
        ],
    )
    assert verdict.passed
    assert verdict.model_dump()["passed"] is True
    verdict.checks.append(CheckResult(name="c", passed=False))
    assert not verdict.passed


def test_coarea_suite(small_options):
    (verdict,) = run_suites("coarea", small_options)
    assert verdict.suite == "coarea"
    assert verdict.passed, _failed(verdict)


def test_duality_suite(small_options):
    verdict = run_suite("duality", small_options)
    assert verdict.passed, _failed(verdict)
    assert {c.name for c in verdict.checks} >= {
        "random_dual_below_tv_weighted",
        "random_dual_below_tv_manhattan",
        "random_dual_below_tv_elliptic",
        "solver_certificate",
    }


def test_nestedness_suite(small_options):
    verdict = run_suite("nestedness", small_options)
    assert verdict.passed, _failed(verdict)


def test_suites_are_reproducible(small_options):
    a = run_suite("coarea", small_options)
    b = run_suite("coarea", small_options)
    assert [c.details for c in a.checks] == [c.details for c in b.checks]


@pytest.mark.slow
@pytest.mark.parametrize(
    "suite",
    [s for s in SUITES if s not in ("coarea", "duality", "nestedness")],
)
def test_heavy_suites(small_options, suite):
    verdict = run_suite(suite, small_options)
    assert verdict.passed, _failed(verdict)


def test_levelset_suite(small_options):
    verdict = run_suite("levelset", small_options)
    assert verdict.passed, _failed(verdict)
    checks = {c.name: c for c in verdict.checks}
    minimize = checks["superlevel_sets_minimize"].details
    assert minimize["tie_prone"] == 0
    assert minimize["levels"] > 0
    assert minimize["max_excess"] <= 1e-5
    cake = checks["layer_cake_reconstruction"]
    assert cake.passed
    assert cake.details["instances"] == 2
