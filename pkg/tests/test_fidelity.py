import numpy as np
import pytest
from weighted_tv.backend.fidelity import FidelityTerm, prox_fidelity
from weighted_tv.backend.grid import ScalarField


@pytest.fixture
def datum(grid_1d, rng):
    return ScalarField(grid=grid_1d, values=rng.normal(size=grid_1d.shape))


def test_quadratic_prox(datum, rng):
    psi = FidelityTerm.quadratic(datum)
    t = rng.normal(size=datum.grid.shape)
    np.testing.assert_allclose(
        psi.prox(t, 0.5), (t + 0.5 * datum.values) / 1.5
    )


@pytest.mark.parametrize("q", [1.2, 1.5, 3.0])
def test_power_prox_optimality(datum, rng, q):
    psi = FidelityTerm.power(datum, q)
    t = rng.normal(0, 3, size=datum.grid.shape)
    tau = 0.7
    s = psi.prox(t, tau)
    # first-order condition of (s - t)² / (2τ) + Ψ(s)
    residual = (s - t) / tau + psi.derivative(s)
    np.testing.assert_allclose(residual, 0.0, atol=1e-8)


@pytest.mark.parametrize("q", [1.5, 2.0, 4.0])
def test_fenchel_young(datum, rng, q):
    psi = FidelityTerm.power(datum, q)
    t = rng.normal(size=datum.grid.shape)
    s = rng.normal(size=datum.grid.shape)
    assert np.all(psi.value(t) + psi.conjugate(s) >= s * t - 1e-12)
    s = psi.derivative(t)
    np.testing.assert_allclose(psi.value(t) + psi.conjugate(s), s * t)


def test_pointwise_prox_matches_field_prox(datum):
    psi = FidelityTerm.power(datum, 1.5)
    t = np.full(datum.grid.shape, 0.3)
    field = psi.prox(t, 0.2)
    assert prox_fidelity(psi, 7, 0.3, 0.2) == pytest.approx(field[7])


def test_fidelity_validation(datum):
    assert FidelityTerm.power(datum, 2.0).kind == "quadratic"
    with pytest.raises(ValueError):
        FidelityTerm.power(datum, 1.0)
    with pytest.raises(ValueError):
        FidelityTerm(kind="quadratic", g=datum, q=3.0)
    with pytest.raises(ValueError):
        FidelityTerm.quadratic(datum).prox(np.zeros(datum.grid.shape), 0.0)
    assert FidelityTerm.quadratic(datum).strong_convexity == 1.0
    assert FidelityTerm.power(datum, 3.0).strong_convexity == 0.0


def test_power_prox_root(grid_1d):
    # argmin (s - 1)² / 2 + s⁴ / 4 solves s³ + s - 1 = 0
    g = ScalarField.constant(grid_1d, 0.0)
    s = prox_fidelity(FidelityTerm.power(g, 4.0), 0, 1.0, 1.0)
    assert s == pytest.approx(0.6823278, abs=1e-6)
    assert s**3 + s - 1 == pytest.approx(0.0, abs=1e-8)
