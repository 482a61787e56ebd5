"""Exact minimization of the 1D weighted problem

    Σ_i w_i |u_i+1 - u_i| + h Σ_i Ψ(x_i, u_i)

by forward message passing and backward recovery. The message F_i is the
optimal cost of the first i + 1 samples as a function of u_i; passing it
across edge i clips its derivative to [-w_i, w_i] (a taut string whose tube
width varies along the signal). Each clip records the two points l_i, r_i
where F_i' crosses -w_i and w_i, and the minimizer is recovered backwards as
u_i = clip(u_i+1, l_i, r_i).
"""

from __future__ import annotations

import logging
from collections import deque

import numpy as np
from pydantic import BaseModel, Field
from scipy.optimize import brentq

from .fidelity import FidelityTerm
from .grid import Grid, ScalarField
from .integrands import FinslerIntegrand

logger = logging.getLogger(__name__)

MERGE_TOL = 1e-12
BRUTE_FORCE_MAX_SAMPLES = 6
BRUTE_FORCE_MAX_VALUES = 64


class SizeLimitError(ValueError):
    """Raised when an exhaustive oracle is asked for a too large instance."""


class PiecewiseQuadratic:
    """A convex, continuous, piecewise quadratic function of one variable.

    Pieces are kept in a deque so that both ends can be clipped in amortized
    constant time. Adding a quadratic to every piece only updates a global
    offset: the actual coefficients of a piece are its stored ones plus
    ``(A, B, C)``.
    """

    def __init__(self, a: float, b: float, c: float):
        self._knots: deque[float] = deque()
        self._pieces: deque[tuple[float, float, float]] = deque(
            [(a, b, c)]
        )
        self._offset = (0.0, 0.0, 0.0)

    # -- representation ------------------------------------------------------

    def _actual(self, piece: tuple[float, float, float]):
        return tuple(p + o for p, o in zip(piece, self._offset))

    def _stored(self, a: float, b: float, c: float):
        return (a - self._offset[0], b - self._offset[1], c - self._offset[2])

    @property
    def breakpoints(self) -> np.ndarray:
        return np.array(self._knots, dtype=float)

    @property
    def coefficients(self) -> np.ndarray:
        """Array of shape (pieces, 3) with rows (a, b, c) of a t² + b t + c."""
        return np.array([self._actual(p) for p in self._pieces], dtype=float)

    def __len__(self) -> int:
        return len(self._pieces)

    def _locate(self, t: float) -> int:
        return int(np.searchsorted(self.breakpoints, t, side="left"))

    def __call__(self, t: float) -> float:
        a, b, c = self._actual(self._pieces[self._locate(t)])
        return a * t * t + b * t + c

    def derivative(self, t: float) -> float:
        a, b, _ = self._actual(self._pieces[self._locate(t)])
        return 2.0 * a * t + b

    def is_convex(self, tol: float = 1e-10) -> bool:
        """Check curvature, continuity and slopes at the breakpoints."""
        coefficients = self.coefficients
        if np.any(coefficients[:, 0] < -tol):
            return False
        for k, t in enumerate(self._knots):
            (a0, b0, c0), (a1, b1, c1) = coefficients[k], coefficients[k + 1]
            left = a0 * t * t + b0 * t + c0
            right = a1 * t * t + b1 * t + c1
            scale = max(1.0, abs(left))
            if abs(left - right) > tol * scale:
                return False
            if 2 * a1 * t + b1 < 2 * a0 * t + b0 - tol * scale:
                return False
        return True

    # -- operations ----------------------------------------------------------

    def add_quadratic(self, a: float, b: float, c: float) -> None:
        A, B, C = self._offset
        self._offset = (A + a, B + b, C + c)

    def argmin(self) -> float:
        """The unique minimizer (every piece has positive curvature once a
        strictly convex quadratic has been added).
        """
        knots = self._knots
        for k, piece in enumerate(self._pieces):
            a, b, _ = self._actual(piece)
            right = knots[k] if k < len(knots) else np.inf
            if right < np.inf and 2 * a * right + b < 0:
                continue
            left = knots[k - 1] if k > 0 else -np.inf
            if a <= 0:
                return left
            return float(np.clip(-b / (2 * a), left, right))
        raise RuntimeError("Piecewise quadratic has no minimizer")

    def clip_derivative(self, w: float) -> tuple[float, float]:
        """Replace F by t ↦ min_s F(s) + w |t - s|.

        The derivative of the result is F' clipped to [-w, w]. Returns the
        points l < r where F' equals -w and w.
        """
        lower = self._clip_left(w)
        upper = self._clip_right(w)
        return lower, upper

    def _root(self, piece, slope: float) -> float:
        a, b, _ = self._actual(piece)
        return (slope - b) / (2.0 * a)

    def _clip_left(self, w: float) -> float:
        knots, pieces = self._knots, self._pieces
        while len(pieces) > 1:
            a, b, _ = self._actual(pieces[0])
            if 2 * a * knots[0] + b > -w:
                break
            pieces.popleft()
            knots.popleft()
        t = self._root(pieces[0], -w)
        if knots:
            t = min(t, knots[0])
        value = self._value_of(pieces[0], t)
        if knots and knots[0] - t <= MERGE_TOL * max(1.0, abs(t)):
            # zero-width remainder
            pieces.popleft()
            knots.popleft()
        knots.appendleft(t)
        pieces.appendleft(self._stored(0.0, -w, value + w * t))
        return t

    def _clip_right(self, w: float) -> float:
        knots, pieces = self._knots, self._pieces
        while len(pieces) > 1:
            a, b, _ = self._actual(pieces[-1])
            if 2 * a * knots[-1] + b < w:
                break
            pieces.pop()
            knots.pop()
        t = self._root(pieces[-1], w)
        if knots:
            t = max(t, knots[-1])
        value = self._value_of(pieces[-1], t)
        if knots and t - knots[-1] <= MERGE_TOL * max(1.0, abs(t)):
            pieces.pop()
            knots.pop()
        knots.append(t)
        pieces.append(self._stored(0.0, w, value - w * t))
        return t

    def _value_of(self, piece, t: float) -> float:
        a, b, c = self._actual(piece)
        return a * t * t + b * t + c


def _as_edge_weights(w_edges, n: int) -> np.ndarray:
    if isinstance(w_edges, FinslerIntegrand):
        if w_edges.grid.ndim != 1:
            raise ValueError("The exact solver needs a 1D integrand")
        w_edges = w_edges.edge_weights[0][: n - 1]
    weights = np.broadcast_to(
        np.asarray(w_edges, dtype=float), (n - 1,)
    ).copy()
    if np.any(~np.isfinite(weights)) or np.any(weights <= 0):
        raise ValueError("Edge weights must be positive and finite")
    return weights


def _check_1d(g: ScalarField) -> Grid:
    grid = g.grid
    if grid.ndim != 1:
        raise ValueError(f"Expected a 1D field, got {grid.ndim}D")
    if grid.boundary != "neumann":
        raise ValueError("The exact 1D solver needs neumann boundaries")
    return grid


def energy_1d(
    u: np.ndarray, w_edges: np.ndarray, psi: FidelityTerm
) -> float:
    """Σ w_i |Δu_i| + h Σ Ψ(x_i, u_i)."""
    h = psi.grid.spacing[0]
    u = np.asarray(u, dtype=float)
    return float(
        np.sum(w_edges * np.abs(np.diff(u))) + h * np.sum(psi.value(u))
    )


def solve_1d_exact(
    g: ScalarField,
    w_edges: np.ndarray | float | FinslerIntegrand,
    psi: FidelityTerm | None = None,
) -> ScalarField:
    """Exact minimizer of the 1D weighted problem.

    Args:
        g (ScalarField): The 1D datum (neumann boundaries).
        w_edges (np.ndarray | float | FinslerIntegrand): One positive weight
            per edge, a scalar broadcast to every edge, or a 1D integrand
            whose edge weights are used.
        psi (FidelityTerm, optional): The fidelity. Defaults to the quadratic
            fidelity on ``g``.

    Raises:
        ValueError: On nonpositive weights or a non-1D/periodic grid.

    Returns:
        ScalarField: The unique global minimizer.
    """
    grid = _check_1d(g)
    n = grid.shape[0]
    weights = _as_edge_weights(w_edges, n)
    if psi is None:
        psi = FidelityTerm.quadratic(g)
    grid.check_same(psi.grid)
    if psi.kind == "quadratic":
        lower, upper, last = _forward_quadratic(psi, weights)
    else:
        lower, upper, last = _forward_generic(psi, weights)
    u = np.empty(n)
    u[-1] = last
    for i in range(n - 2, -1, -1):
        u[i] = min(max(u[i + 1], lower[i]), upper[i])
    logger.debug(
        "Exact 1D solve of %d samples, energy %.12g",
        n,
        energy_1d(u, weights, psi),
    )
    return g.with_values(u)


def _forward_quadratic(psi: FidelityTerm, weights: np.ndarray):
    h = psi.grid.spacing[0]
    g = psi.g.values
    n = g.size
    lower = np.empty(n - 1)
    upper = np.empty(n - 1)
    message = PiecewiseQuadratic(0.5 * h, -h * g[0], 0.5 * h * g[0] ** 2)
    for i in range(n - 1):
        lower[i], upper[i] = message.clip_derivative(weights[i])
        message.add_quadratic(0.5 * h, -h * g[i + 1], 0.5 * h * g[i + 1] ** 2)
    return lower, upper, message.argmin()


def _forward_generic(psi: FidelityTerm, weights: np.ndarray):
    # The derivative of every message is evaluated by replaying the clipped
    # recursion from the first sample, so each solve costs O(n²) evaluations.
    h = psi.grid.spacing[0]
    g = psi.g.values
    q = psi.q
    n = g.size

    def fidelity_slope(i: int, t: float) -> float:
        d = t - g[i]
        return h * np.sign(d) * abs(d) ** (q - 1.0)

    def message_slope(i: int, t: float) -> float:
        slope = fidelity_slope(0, t)
        for k in range(1, i + 1):
            slope = min(max(slope, -weights[k - 1]), weights[k - 1])
            slope += fidelity_slope(k, t)
        return slope

    def root(i: int, target: float) -> float:
        span = max(float(np.ptp(g)), 1.0)
        lo, hi = float(np.min(g)) - span, float(np.max(g)) + span
        while message_slope(i, lo) > target:
            lo -= 2.0 * (hi - lo)
        while message_slope(i, hi) < target:
            hi += 2.0 * (hi - lo)
        return brentq(
            lambda t: message_slope(i, t) - target, lo, hi, xtol=1e-14
        )

    lower = np.array([root(i, -weights[i]) for i in range(n - 1)])
    upper = np.array([root(i, weights[i]) for i in range(n - 1)])
    return lower, upper, root(n - 1, 0.0)


def dual_certificate_1d(u: ScalarField, psi: FidelityTerm) -> np.ndarray:
    """Edge field z with div z = -∂_tΨ(x, u), the dual iterate matching an
    exact 1D minimizer. Shape (1, n) with the last entry zero.
    """
    h = u.grid.spacing[0]
    z = -h * np.cumsum(psi.derivative(u.values))
    z[-1] = 0.0
    return z[np.newaxis]


def brute_force_1d(
    g: ScalarField,
    w_edges: np.ndarray | float,
    psi: FidelityTerm | None,
    value_grid: np.ndarray,
) -> tuple[ScalarField, float]:
    """Exact minimum over value_grid^n, found by min-sum dynamic programming
    over the chain (equivalent to enumerating every configuration).

    Raises:
        SizeLimitError: If n > 6 or the value grid has more than 64 values.

    Returns:
        tuple[ScalarField, float]: The best quantized configuration (ties go
            to the smallest values) and its energy.
    """
    grid = _check_1d(g)
    n = grid.shape[0]
    values = np.unique(np.asarray(value_grid, dtype=float))
    if n > BRUTE_FORCE_MAX_SAMPLES:
        raise SizeLimitError(
            f"Brute force is limited to {BRUTE_FORCE_MAX_SAMPLES} samples, "
            f"got {n}"
        )
    if values.size > BRUTE_FORCE_MAX_VALUES or values.size == 0:
        raise SizeLimitError(
            f"Value grid must have 1 to {BRUTE_FORCE_MAX_VALUES} values, "
            f"got {values.size}"
        )
    weights = _as_edge_weights(w_edges, n)
    if psi is None:
        psi = FidelityTerm.quadratic(g)
    h = grid.spacing[0]
    # fidelity[i, k] = h Ψ(x_i, values[k])
    fidelity = np.stack(
        [h * psi.value(np.full(n, v)) for v in values], axis=1
    )
    jumps = np.abs(values[:, None] - values[None, :])
    cost = fidelity[0].copy()
    back = np.zeros((n, values.size), dtype=int)
    for i in range(1, n):
        candidates = cost[:, None] + weights[i - 1] * jumps
        back[i] = np.argmin(candidates, axis=0)
        cost = candidates[back[i], np.arange(values.size)] + fidelity[i]
    index = np.empty(n, dtype=int)
    index[-1] = int(np.argmin(cost))
    for i in range(n - 1, 0, -1):
        index[i - 1] = back[i, index[i]]
    u = values[index]
    return g.with_values(u), energy_1d(u, weights, psi)


class FlatZone(BaseModel):
    """A maximal run of samples on which u is constant within tolerance."""

    start: int = Field(description="First sample index.")
    stop: int = Field(description="One past the last sample index.")
    level: float = Field(description="Mean value of u on the run.")
    x_start: float
    x_stop: float

    @property
    def length(self) -> int:
        return self.stop - self.start

    def contains(self, index: int) -> bool:
        return self.start <= index < self.stop


def flat_zone_report(
    u: ScalarField, tol: float = 0.0, min_length: int = 2
) -> list[FlatZone]:
    """Maximal runs where |u_i+1 - u_i| <= tol.

    Args:
        u (ScalarField): A 1D field.
        tol (float, optional): Increment tolerance. Defaults to 0.
        min_length (int, optional): Shortest run reported, in samples.
            Defaults to 2; use 1 to also list isolated samples.

    Returns:
        list[FlatZone]: Runs in increasing order of position.
    """
    if tol < 0:
        raise ValueError(f"Tolerance must be nonnegative, got {tol}")
    if u.grid.ndim != 1:
        raise ValueError("Flat zones are defined for 1D fields")
    values = u.values
    x = u.grid.axis_coordinates(0)
    breaks = np.flatnonzero(np.abs(np.diff(values)) > tol) + 1
    bounds = np.concatenate([[0], breaks, [values.size]])
    zones = []
    for start, stop in zip(bounds[:-1], bounds[1:]):
        if stop - start < min_length:
            continue
        zones.append(
            FlatZone(
                start=int(start),
                stop=int(stop),
                level=float(np.mean(values[start:stop])),
                x_start=float(x[start]),
                x_stop=float(x[stop - 1]),
            )
        )
    return zones


class FlatZoneSummary(BaseModel):
    """Whether the extrema of g sit inside flat zones of u."""

    zones: list[FlatZone]
    argmax_g: int
    argmin_g: int
    max_in_flat_zone: bool
    min_in_flat_zone: bool

    @property
    def passed(self) -> bool:
        return self.max_in_flat_zone and self.min_in_flat_zone


def extrema_flat_zones(
    g: ScalarField, u: ScalarField, tol: float = 1e-9
) -> FlatZoneSummary:
    zones = flat_zone_report(u, tol)
    argmax_g = int(np.argmax(g.values))
    argmin_g = int(np.argmin(g.values))
    return FlatZoneSummary(
        zones=zones,
        argmax_g=argmax_g,
        argmin_g=argmin_g,
        max_in_flat_zone=any(z.contains(argmax_g) for z in zones),
        min_in_flat_zone=any(z.contains(argmin_g) for z in zones),
    )
