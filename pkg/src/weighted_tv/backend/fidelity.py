"""Pointwise fidelity terms Ψ(x, t) = |t - g(x)|^q / q (q = 2 is the
quadratic ROF fidelity) with their derivative, proximal map and convex
conjugate.
"""

from __future__ import annotations

import logging
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field, model_validator

from .grid import ScalarField

logger = logging.getLogger(__name__)

FidelityKind = Literal["quadratic", "power"]

_PROX_ITERS = 200
_PROX_TOL = 1e-12


class FidelityError(ValueError):
    """Raised when an inner proximal solve does not reach its tolerance."""


class FidelityTerm(BaseModel):
    """A strictly convex, coercive fidelity centered on the datum ``g``."""

    kind: FidelityKind = "quadratic"
    g: ScalarField
    q: float = Field(
        2.0,
        title="Exponent",
        description="Exponent of the power fidelity; must exceed 1. Fixed "
        "to 2 for the quadratic kind.",
    )
    model_config = {"frozen": True}

    @model_validator(mode="after")
    def _check(self) -> FidelityTerm:
        if self.kind == "quadratic" and self.q != 2.0:
            raise ValueError("The quadratic fidelity has exponent 2")
        if not self.q > 1:
            raise ValueError(
                f"Exponent must exceed 1 for strict convexity, got {self.q}"
            )
        return self

    @classmethod
    def quadratic(cls, g: ScalarField) -> FidelityTerm:
        return cls(kind="quadratic", g=g)

    @classmethod
    def power(cls, g: ScalarField, q: float) -> FidelityTerm:
        if q == 2.0:
            return cls.quadratic(g)
        return cls(kind="power", g=g, q=q)

    @property
    def grid(self):
        return self.g.grid

    @property
    def conjugate_exponent(self) -> float:
        return self.q / (self.q - 1.0)

    @property
    def strong_convexity(self) -> float:
        """Modulus of strong convexity in t (zero when there is none)."""
        return 1.0 if self.kind == "quadratic" else 0.0

    def value(self, t: np.ndarray | float) -> np.ndarray:
        """Ψ(x, t) at every grid point."""
        diff = np.abs(np.asarray(t, dtype=float) - self.g.values)
        if self.kind == "quadratic":
            return 0.5 * diff**2
        return diff**self.q / self.q

    def derivative(self, t: np.ndarray | float) -> np.ndarray:
        """∂_tΨ(x, t) at every grid point."""
        diff = np.asarray(t, dtype=float) - self.g.values
        if self.kind == "quadratic":
            return diff
        return np.sign(diff) * np.abs(diff) ** (self.q - 1.0)

    def conjugate(self, s: np.ndarray) -> np.ndarray:
        """Ψ*(x, s) = s g(x) + |s|^q' / q' with q' the conjugate exponent."""
        s = np.asarray(s, dtype=float)
        if self.kind == "quadratic":
            return s * self.g.values + 0.5 * s**2
        p = self.conjugate_exponent
        return s * self.g.values + np.abs(s) ** p / p

    def prox(self, t: np.ndarray, tau: float) -> np.ndarray:
        """argmin_s (s - t)² / (2τ) + Ψ(x, s), elementwise.

        Raises:
            FidelityError: If the safeguarded Newton iteration for the power
                kind does not converge.
        """
        if not tau > 0:
            raise ValueError(f"Prox step must be positive, got {tau}")
        t = np.broadcast_to(np.asarray(t, dtype=float), self.g.values.shape)
        if self.kind == "quadratic":
            return (t + tau * self.g.values) / (1.0 + tau)
        d = t - self.g.values
        return self.g.values + np.sign(d) * _power_prox_radius(
            np.abs(d), tau, self.q
        )


def _power_prox_radius(target: np.ndarray, tau: float, q: float) -> np.ndarray:
    # root r in [0, target] of r + tau r^(q-1) = target, increasing in r
    lo = np.zeros_like(target)
    hi = target.copy()
    r = target / (1.0 + tau)
    tol = _PROX_TOL * np.maximum(1.0, target)
    with np.errstate(divide="ignore", invalid="ignore"):
        for _ in range(_PROX_ITERS):
            f = r + tau * r ** (q - 1.0) - target
            done = np.abs(f) <= tol
            if np.all(done):
                break
            lo = np.where(f < 0, r, lo)
            hi = np.where(f > 0, r, hi)
            slope = 1.0 + tau * (q - 1.0) * r ** (q - 2.0)
            newton = r - f / slope
            inside = np.isfinite(newton) & (newton > lo) & (newton < hi)
            r = np.where(done, r, np.where(inside, newton, 0.5 * (lo + hi)))
        residual = np.abs(r + tau * r ** (q - 1.0) - target)
    if np.any(residual > tol):
        worst = float(np.max(residual - tol))
        raise FidelityError(
            f"Power prox did not converge (excess residual {worst:.3e})"
        )
    return r


def prox_fidelity(
    psi: FidelityTerm,
    x: tuple[int, ...] | int,
    t: float,
    tau: float,
) -> float:
    """Proximal map of τΨ(x, ·) at a single grid point.

    Args:
        psi (FidelityTerm): The fidelity.
        x (tuple[int, ...] | int): Grid index.
        t (float): The point to evaluate the prox at.
        tau (float): Positive step.

    Returns:
        float: argmin_s (s - t)² / (2τ) + Ψ(x, s).
    """
    if not tau > 0:
        raise ValueError(f"Prox step must be positive, got {tau}")
    x = (x,) if isinstance(x, (int, np.integer)) else tuple(x)
    g = float(psi.g.values[x])
    if psi.kind == "quadratic":
        return (t + tau * g) / (1.0 + tau)
    d = t - g
    r = _power_prox_radius(np.array([abs(d)]), tau, psi.q)[0]
    return g + float(np.sign(d)) * float(r)
