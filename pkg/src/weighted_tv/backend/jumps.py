"""Discrete jump detection and the checks built on it: jump inclusion,
contrast decrease, stability in the regularization weight and inclusion of
large jumps across nearby weights.

A forward edge (i, i + 1) along an axis is a jump of u at threshold θ when
both |u_i+1 - u_i| > θ and the one-sided means over two cells on each side
differ by more than θ. The second condition rejects steep but continuous
ramps. The one-sided means are the traces u⁻ and u⁺.
"""

from __future__ import annotations

import csv
import logging
from collections.abc import Sequence
from pathlib import Path

import numpy as np
from pydantic import BaseModel, Field

from .energy import anisotropic_tv
from .grid import Grid, ScalarField, forward_gradient
from .integrands import FinslerIntegrand, GradientNorm
from .solve import SolverReport, solve_rof
from .solver_params import SolverParams
from .weights import WeightPreset, get_weight_preset

logger = logging.getLogger(__name__)

DEFAULT_RADIUS = 1
EXACT_SLACK = 1e-9

Weight = float | str | WeightPreset | ScalarField


class JumpRecord(BaseModel):
    """A jump across the forward edge leaving node ``index`` along ``axis``."""

    axis: int
    index: tuple[int, ...]
    position: tuple[float, ...] = Field(
        description="Edge midpoint coordinates."
    )
    u_minus: float
    u_plus: float
    height: float
    orientation: int = Field(
        description="+1 if u increases along the axis across the edge, "
        "else -1."
    )

    @property
    def location(self) -> tuple[int, ...]:
        return (self.axis, *self.index)


class JumpSet(BaseModel):
    """Detected jumps of one field, sorted by (axis, index)."""

    grid: Grid
    records: list[JumpRecord]
    threshold: float
    source: str = "u"

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def max_height(self) -> float:
        return max((r.height for r in self.records), default=0.0)

    def locations(self) -> list[tuple[int, ...]]:
        return [r.location for r in self.records]

    def to_csv(self, path: str | Path) -> None:
        """Write rows (location, u_minus, u_plus, height, axis)."""
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(
                ["location", "u_minus", "u_plus", "height", "axis"]
            )
            for r in self.records:
                writer.writerow(
                    [
                        " ".join(map(str, r.index)),
                        repr(r.u_minus),
                        repr(r.u_plus),
                        repr(r.height),
                        r.axis,
                    ]
                )


def _shifted(
    values: np.ndarray, axis: int, offset: int, grid: Grid
) -> np.ndarray:
    """values[i + offset] along ``axis``, clamped under neumann boundaries."""
    if grid.boundary == "periodic":
        return np.roll(values, -offset, axis=axis)
    n = values.shape[axis]
    index = np.clip(np.arange(n) + offset, 0, n - 1)
    return np.take(values, index, axis=axis)


def _increment_scale(values: np.ndarray, grid: Grid) -> np.ndarray:
    mask = grid.edge_mask()
    steps = [
        np.abs(_shifted(values, a, 1, grid) - values)[mask[a]]
        for a in range(grid.ndim)
    ]
    return np.concatenate(steps)


def default_threshold(g: ScalarField) -> float:
    """20 times the 95th percentile of |Δg| over all edges, floored at 1e-3
    times the range of g.
    """
    steps = _increment_scale(g.values, g.grid)
    resolution = 20.0 * float(np.percentile(steps, 95)) if steps.size else 0.0
    return max(resolution, 1e-3 * float(np.ptp(g.values)), 1e-12)


def detect_jumps(
    u: ScalarField, threshold: float | None = None, source: str = "u"
) -> JumpSet:
    """Detect jumps of u on every real forward edge.

    Args:
        u (ScalarField): The field.
        threshold (float, optional): Detection threshold. Defaults to
            :func:`default_threshold` of u.
        source (str, optional): Name recorded on the jump set.

    Returns:
        JumpSet: The jumps, sorted by axis then index.
    """
    if threshold is None:
        threshold = default_threshold(u)
    if not threshold > 0:
        raise ValueError(f"Threshold must be positive, got {threshold}")
    grid = u.grid
    values = u.values
    mask = grid.edge_mask()
    records = []
    for axis in range(grid.ndim):
        after = _shifted(values, axis, 1, grid)
        before_mean = 0.5 * (values + _shifted(values, axis, -1, grid))
        after_mean = 0.5 * (after + _shifted(values, axis, 2, grid))
        step = after - values
        contrast = after_mean - before_mean
        hits = (
            mask[axis]
            & (np.abs(step) > threshold)
            & (np.abs(contrast) > threshold)
        )
        positions = grid.edge_coordinates(axis)
        for index in zip(*np.nonzero(hits)):
            lo, hi = sorted((before_mean[index], after_mean[index]))
            records.append(
                JumpRecord(
                    axis=axis,
                    index=tuple(int(i) for i in index),
                    position=tuple(float(p[index]) for p in positions),
                    u_minus=float(lo),
                    u_plus=float(hi),
                    height=float(hi - lo),
                    orientation=1 if contrast[index] > 0 else -1,
                )
            )
    return JumpSet(
        grid=grid, records=records, threshold=threshold, source=source
    )


def weight_gradient_jumps(
    w: WeightPreset | str | ScalarField,
    grid: Grid | None = None,
    threshold: float | None = None,
) -> JumpSet:
    """The union over axes of the jump sets of ∂_a w.

    A preset with an analytic derivative is sampled at the nodes of ``grid``
    (its derivative is along x; the y component vanishes), so a jump of ∂_x w
    between two nodes lands on the u edge between them. Otherwise the
    forward differences of the node samples are used, located at their
    edges, and a kink between samples is spread over two increments.

    Raises:
        ValueError: If the derivative samples are not finite (w is not
            Lipschitz at this resolution).
    """
    if isinstance(w, str):
        w = get_weight_preset(w)
    if isinstance(w, WeightPreset):
        if grid is None:
            raise ValueError("A grid is needed to sample a weight preset")
        if w.derivative is not None:
            with np.errstate(divide="ignore", invalid="ignore"):
                dx = np.asarray(
                    w.derivative(grid.node_coordinates()), dtype=float
                )
            components = [np.zeros(grid.shape)] * (grid.ndim - 1) + [dx]
        else:
            components = _edge_components(w(grid.node_coordinates()), grid)
    else:
        grid = w.grid
        components = _edge_components(w.values, grid)
    records: list[JumpRecord] = []
    thresholds = []
    for axis, component in enumerate(components):
        if not np.all(np.isfinite(component)):
            raise ValueError(
                "Weight gradient is not finite; the weight is not Lipschitz "
                "at this resolution"
            )
        field = ScalarField(grid=grid, values=component)
        jumps = detect_jumps(field, threshold, source=f"d{axis}w")
        thresholds.append(jumps.threshold)
        records.extend(jumps.records)
    unique = {r.location: r for r in records}
    ordered = [unique[k] for k in sorted(unique)]
    return JumpSet(
        grid=grid,
        records=ordered,
        threshold=max(thresholds),
        source="grad_w",
    )


def _edge_components(values: np.ndarray, grid: Grid) -> list[np.ndarray]:
    # forward differences with the missing last edge copied from its
    # neighbour, so the boundary does not read as a jump
    with np.errstate(invalid="ignore"):
        grad = forward_gradient(values, grid)
    components = []
    for axis in range(grid.ndim):
        component = grad[axis]
        if grid.boundary == "neumann":
            component = component.copy()
            last = [slice(None)] * grid.ndim
            before = [slice(None)] * grid.ndim
            last[axis], before[axis] = -1, -2
            component[tuple(last)] = component[tuple(before)]
        components.append(component)
    return components


def _chebyshev(a: JumpRecord, b: JumpRecord) -> int:
    return max(abs(i - j) for i, j in zip(a.index, b.index))


def _near(
    record: JumpRecord, allowed: JumpSet, radius: int
) -> list[JumpRecord]:
    return [r for r in allowed.records if _chebyshev(record, r) <= radius]


def _edge_step(u: ScalarField, record: JumpRecord) -> float:
    """|u_i+1 - u_i| across the record's edge."""
    after = list(record.index)
    after[record.axis] = (after[record.axis] + 1) % u.grid.shape[record.axis]
    return float(abs(u.values[tuple(after)] - u.values[record.index]))


class InclusionReport(BaseModel):
    checked: int
    violations: list[JumpRecord]
    radius: int

    @property
    def passed(self) -> bool:
        return not self.violations


def check_jump_inclusion(
    Ju: JumpSet, allowed: Sequence[JumpSet], radius: int = DEFAULT_RADIUS
) -> InclusionReport:
    """Jumps of Ju with no allowed jump within ``radius`` nodes (Chebyshev
    distance of the edge base nodes).

    Raises:
        GridMismatchError: If the sets live on different grids.
    """
    if radius < 0:
        raise ValueError(f"Radius must be nonnegative, got {radius}")
    for other in allowed:
        Ju.grid.check_same(other.grid)
    violations = [
        r
        for r in Ju.records
        if not any(_near(r, other, radius) for other in allowed)
    ]
    return InclusionReport(
        checked=len(Ju), violations=violations, radius=radius
    )


class ContrastMatch(BaseModel):
    u_jump: JumpRecord
    g_jump: JumpRecord
    excess: float = Field(description="height_u - height_g")


class ContrastReport(BaseModel):
    matches: list[ContrastMatch]
    violations: list[ContrastMatch]
    unmatched: list[JumpRecord] = Field(
        description="Jumps of u with no jump of g nearby. These are "
        "inclusion violations."
    )
    tolerance: float
    passed: bool

    @property
    def max_excess(self) -> float:
        return max((m.excess for m in self.matches), default=-np.inf)


def check_contrast_decrease(
    Ju: JumpSet,
    Jg: JumpSet,
    tolerance: float = 1e-3,
    radius: int = DEFAULT_RADIUS,
) -> ContrastReport:
    """Match every jump of u to the nearest jump of g across the same axis
    with the same orientation (ties go to the taller jump) and check
    height_u <= height_g + tolerance.
    """
    Ju.grid.check_same(Jg.grid)
    matches, violations, unmatched = [], [], []
    for r in Ju.records:
        candidates = [
            c
            for c in _near(r, Jg, radius)
            if c.axis == r.axis and c.orientation == r.orientation
        ]
        if not candidates:
            unmatched.append(r)
            continue
        best = min(candidates, key=lambda c: (_chebyshev(r, c), -c.height))
        match = ContrastMatch(
            u_jump=r, g_jump=best, excess=r.height - best.height
        )
        matches.append(match)
        if match.excess > tolerance:
            violations.append(match)
    return ContrastReport(
        matches=matches,
        violations=violations,
        unmatched=unmatched,
        tolerance=tolerance,
        passed=not violations and not unmatched,
    )


# -- stability in the regularization weight -----------------------------------


def _rof(
    g: ScalarField, lam: float, params: SolverParams, weight: Weight = 1.0
) -> tuple[ScalarField, float]:
    """Minimizer for the integrand lam * w and its pointwise error bound."""
    u, report = solve_rof(g, weight, params, scale=lam, require_converged=True)
    return u, _sup_error(report, g.grid)


def _sup_error(report: SolverReport, grid: Grid) -> float:
    if report.method == "exact-1d":
        return EXACT_SLACK
    return float(np.sqrt(2.0 * max(report.gap, 0.0) / grid.cell_measure))


def _l2(values: np.ndarray, grid: Grid) -> float:
    return float(np.sqrt(np.sum(values**2) * grid.cell_measure))


class StabilityReport(BaseModel):
    lam: float
    mu: float
    sup_difference: float
    sup_bound: float
    l2_difference: float
    l2_bound: float
    slack: float = Field(description="Solver accuracy slack on the sup norm.")
    l2_slack: float
    sup_passed: bool
    l2_passed: bool
    passed: bool


def lambda_stability_check(
    g: ScalarField,
    lam: float,
    mu: float,
    gap_tol: float = 1e-8,
    params: SolverParams | None = None,
    weight: Weight = 1.0,
) -> StabilityReport:
    """Compare the minimizers for the integrands λw and μw (w = 1 by
    default) against
    ‖u_λ - u_μ‖_∞ <= 2|Ω|‖g‖_∞|λ - μ| / min(λ, μ) and the L2 estimate
    ‖u_λ - u_μ‖_2 <= |λ - μ| / min(λ, μ) ‖g - u_min(λ, μ)‖_2.

    Raises:
        NotConvergedError: If either solve does not converge.
    """
    if not (lam > 0 and mu > 0):
        raise ValueError("Regularization weights must be positive")
    params = (params or SolverParams()).model_copy(update={"gap_tol": gap_tol})
    grid = g.grid
    u_lam, err_lam = _rof(g, lam, params, weight)
    if mu == lam:
        u_mu, err_mu = u_lam, err_lam
    else:
        u_mu, err_mu = _rof(g, mu, params, weight)
    smaller = min(lam, mu)
    u_small = u_lam if lam <= mu else u_mu
    ratio = abs(lam - mu) / smaller
    diff = u_lam.values - u_mu.values
    sup_bound = 2.0 * grid.measure * g.sup_norm * ratio
    slack = err_lam + err_mu
    l2_difference = _l2(diff, grid)
    l2_bound = ratio * _l2(g.values - u_small.values, grid)
    l2_slack = (1.0 + ratio) * np.sqrt(grid.measure) * slack
    sup_difference = float(np.max(np.abs(diff)))
    sup_passed = sup_difference <= sup_bound + slack
    l2_passed = l2_difference <= l2_bound + l2_slack
    logger.info(
        "Stability lam=%.4g mu=%.4g: sup diff %.3e (bound %.3e + %.1e)",
        lam,
        mu,
        sup_difference,
        sup_bound,
        slack,
    )
    return StabilityReport(
        lam=lam,
        mu=mu,
        sup_difference=sup_difference,
        sup_bound=sup_bound,
        l2_difference=l2_difference,
        l2_bound=l2_bound,
        slack=slack,
        l2_slack=float(l2_slack),
        sup_passed=sup_passed,
        l2_passed=l2_passed,
        passed=sup_passed and l2_passed,
    )


class EpsilonInclusionReport(BaseModel):
    lam: float
    mu: float
    epsilon: float
    hypothesis_bound: float = Field(
        description="Largest |λ - μ| for which the inclusion is claimed."
    )
    skipped: bool
    reason: str | None = None
    threshold: float | None = None
    height_cutoff: float | None = None
    large_jumps: int = 0
    violations: list[JumpRecord] = []
    passed: bool | None = None


def epsilon_jump_inclusion_check(
    g: ScalarField,
    lam: float,
    mu: float,
    epsilon: float,
    threshold: float | None = None,
    radius: int = DEFAULT_RADIUS,
    params: SolverParams | None = None,
    weight: Weight = 1.0,
    minimizers: tuple[ScalarField, ScalarField] | None = None,
) -> EpsilonInclusionReport:
    """Check that every jump of u_λ taller than ε (plus detector slack) has a
    jump of u_μ within ``radius``.

    Skipped, with ``passed=None``, unless |μ - λ| <= ε min(λ, μ) /
    (2|Ω|‖g‖_∞). Under that hypothesis ‖u_λ - u_μ‖_∞ <= ε, so a jump of u_λ
    whose height and step both exceed 2ε + θ survives in u_μ at detector
    threshold θ; the cutoff is therefore ε + (ε + θ).

    ``minimizers`` are certified (u_λ, u_μ) from an earlier solve; without
    them both problems are solved here.

    Raises:
        NotConvergedError: If a solve done here does not converge.
    """
    if not (lam > 0 and mu > 0 and epsilon > 0):
        raise ValueError("lam, mu and epsilon must be positive")
    grid = g.grid
    sup_g = g.sup_norm
    if sup_g == 0:
        hypothesis = np.inf
    else:
        hypothesis = epsilon * min(lam, mu) / (2.0 * grid.measure * sup_g)
    report = EpsilonInclusionReport(
        lam=lam,
        mu=mu,
        epsilon=epsilon,
        hypothesis_bound=hypothesis,
        skipped=True,
    )
    if abs(mu - lam) > hypothesis:
        return report.model_copy(
            update={
                "reason": f"|mu - lam| = {abs(mu - lam):.3e} exceeds "
                f"{hypothesis:.3e}"
            }
        )
    params = params or SolverParams()
    if threshold is None:
        threshold = default_threshold(g)
    if minimizers is not None:
        u_lam, u_mu = minimizers
    else:
        u_lam, _ = _rof(g, lam, params, weight)
        u_mu = _rof(g, mu, params, weight)[0] if mu != lam else u_lam
    cutoff = epsilon + (epsilon + threshold)
    large = [
        r
        for r in detect_jumps(u_lam, threshold).records
        if r.height > cutoff and _edge_step(u_lam, r) > cutoff
    ]
    J_mu = detect_jumps(u_mu, threshold, source="u_mu")
    violations = [r for r in large if not _near(r, J_mu, radius)]
    return report.model_copy(
        update={
            "skipped": False,
            "threshold": threshold,
            "height_cutoff": cutoff,
            "large_jumps": len(large),
            "violations": violations,
            "passed": not violations,
        }
    )


class RateRow(BaseModel):
    lam: float
    half_sq_distance: float = Field(description="½‖u_λ - g‖²")
    bound: float = Field(description="λ TV(g)")
    slack: float
    passed: bool


class RateReport(BaseModel):
    rows: list[RateRow]
    passed: bool


def lambda_rate_check(
    g: ScalarField,
    lambdas: Sequence[float],
    params: SolverParams | None = None,
    norm: GradientNorm | None = None,
    weight: Weight = 1.0,
) -> RateReport:
    """Check ½‖u_λ - g‖² <= λ TV_w(g) for every λ (g is itself a
    candidate).
    """
    params = params or SolverParams()
    if norm is not None:
        params = params.model_copy(update={"gradient_norm": norm})
    grid = g.grid
    tv_g = anisotropic_tv(
        g, FinslerIntegrand.weighted(grid, weight), params.gradient_norm
    )
    rows = []
    for lam in lambdas:
        u, report = solve_rof(g, weight, params, scale=lam)
        distance = _l2(u.values - g.values, grid)
        value = 0.5 * distance**2
        if report.method == "exact-1d":
            slack = EXACT_SLACK
        else:
            root = np.sqrt(2.0 * max(report.gap, 0.0))
            slack = float(root * distance + report.gap)
        bound = lam * tv_g
        rows.append(
            RateRow(
                lam=lam,
                half_sq_distance=value,
                bound=bound,
                slack=slack,
                passed=value <= bound + slack,
            )
        )
    return RateReport(rows=rows, passed=all(r.passed for r in rows))


class BumpReport(BaseModel):
    """Columns where u is not monotone in y near a horizontal interface."""

    fraction: float
    columns: int
    window: int
    passed: bool


def interface_bump_fraction(
    u: ScalarField,
    interface_rows: Sequence[int],
    window: int = 5,
    tol: float = 1e-9,
) -> BumpReport:
    """Fraction of columns where u, restricted to ``window`` rows on either
    side of an interface edge (row r to r + 1), has increments of both signs.
    Passes when at least half of the columns show such a bump.
    """
    grid = u.grid
    if grid.ndim != 2:
        raise ValueError("Bumps are measured on 2D fields")
    n_rows, n_cols = grid.shape
    bumpy = np.zeros(n_cols, dtype=bool)
    for row in interface_rows:
        rows = np.arange(row - window + 1, row + window + 1)
        if grid.boundary == "periodic":
            rows = rows % n_rows
        else:
            rows = rows[(rows >= 0) & (rows < n_rows)]
        steps = np.diff(u.values[rows], axis=0)
        bumpy |= np.any(steps > tol, axis=0) & np.any(steps < -tol, axis=0)
    fraction = float(np.mean(bumpy))
    return BumpReport(
        fraction=fraction,
        columns=n_cols,
        window=window,
        passed=fraction >= 0.5,
    )
