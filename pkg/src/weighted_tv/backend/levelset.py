"""Superlevel sets, discrete anisotropic perimeters and the geometric
problem solved by every superlevel set of a minimizer:

    min_E  P_Φ(E) + Σ_{x ∈ E} ∂_tΨ(x, t) · cell measure.

For weighted integrands with the per-edge (manhattan) perimeter this problem
is a minimum s-t cut on the 4-connected grid graph.
"""

from __future__ import annotations

import logging
from collections import deque
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from functools import partial

import networkx as nx
import numpy as np
from networkx.algorithms.flow import boykov_kolmogorov
from pydantic import BaseModel, Field, field_validator, model_validator

from .energy import anisotropic_tv
from .fidelity import FidelityTerm
from .grid import Grid, ScalarField
from .integrands import FinslerIntegrand, GradientNorm
from .solver_1d import SizeLimitError

logger = logging.getLogger(__name__)

MINCUT_MAX_SIZE = 512 * 512
EXHAUSTIVE_MAX_CELLS = 16
TIE_TOL = 1e-4


class BinaryField(BaseModel):
    """A subset E of the grid, stored as its membership mask."""

    grid: Grid
    membership: np.ndarray
    model_config = {"arbitrary_types_allowed": True, "frozen": True}

    @field_validator("membership", mode="before")
    @classmethod
    def _as_mask(cls, membership) -> np.ndarray:
        mask = np.array(membership, dtype=bool)
        mask.setflags(write=False)
        return mask

    @model_validator(mode="after")
    def _check(self) -> BinaryField:
        if self.membership.shape != self.grid.shape:
            raise ValueError(
                f"Membership of shape {self.membership.shape} does not match "
                f"grid shape {self.grid.shape}"
            )
        return self

    @classmethod
    def empty(cls, grid: Grid) -> BinaryField:
        return cls(grid=grid, membership=np.zeros(grid.shape, dtype=bool))

    @classmethod
    def full(cls, grid: Grid) -> BinaryField:
        return cls(grid=grid, membership=np.ones(grid.shape, dtype=bool))

    @property
    def count(self) -> int:
        return int(self.membership.sum())

    def indicator(self) -> ScalarField:
        return ScalarField(grid=self.grid, values=self.membership)

    def complement(self) -> BinaryField:
        return BinaryField(grid=self.grid, membership=~self.membership)

    def issubset(self, other: BinaryField) -> bool:
        self.grid.check_same(other.grid)
        return not np.any(self.membership & ~other.membership)

    def __and__(self, other: BinaryField) -> BinaryField:
        self.grid.check_same(other.grid)
        return BinaryField(
            grid=self.grid, membership=self.membership & other.membership
        )

    def __or__(self, other: BinaryField) -> BinaryField:
        self.grid.check_same(other.grid)
        return BinaryField(
            grid=self.grid, membership=self.membership | other.membership
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinaryField):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(
            self.membership, other.membership
        )


def superlevel(u: ScalarField, t: float) -> BinaryField:
    """The strict superlevel set {u > t}."""
    return BinaryField(grid=u.grid, membership=u.values > t)


def weighted_perimeter(
    E: BinaryField,
    phi: FinslerIntegrand,
    norm: GradientNorm = "manhattan",
) -> float:
    """P_Φ(E) relative to the domain: the total variation of χ_E."""
    return anisotropic_tv(E.indicator(), phi, norm)


def geometric_energy(
    E: BinaryField,
    phi: FinslerIntegrand,
    psi: FidelityTerm,
    t: float,
    norm: GradientNorm = "manhattan",
) -> float:
    """P_Φ(E) + Σ_{x ∈ E} ∂_tΨ(x, t) times the cell measure."""
    E.grid.check_same(psi.grid)
    forcing = psi.derivative(t)
    volume = float(np.sum(forcing[E.membership]) * E.grid.cell_measure)
    return weighted_perimeter(E, phi, norm) + volume


def submodularity_gap(
    E: BinaryField,
    F: BinaryField,
    phi: FinslerIntegrand,
    norm: GradientNorm = "manhattan",
) -> float:
    """P(E) + P(F) - P(E ∩ F) - P(E ∪ F), nonnegative for a submodular
    perimeter.
    """
    return (
        weighted_perimeter(E, phi, norm)
        + weighted_perimeter(F, phi, norm)
        - weighted_perimeter(E & F, phi, norm)
        - weighted_perimeter(E | F, phi, norm)
    )


# -- min-cut ------------------------------------------------------------------


def _neighbour_capacities(phi: FinslerIntegrand):
    """Yield (axis, source indices, target indices, capacities) per axis."""
    grid = phi.grid
    index = np.arange(grid.size).reshape(grid.shape)
    mask = grid.edge_mask()
    for axis, h in enumerate(grid.spacing):
        neighbour = np.roll(index, -1, axis=axis)
        real = mask[axis]
        capacity = phi.edge_weights[axis] * grid.cell_measure / h
        yield axis, index[real], neighbour[real], capacity[real]


def _terminal_forcing(psi: FidelityTerm, t: float) -> np.ndarray:
    return (psi.derivative(t) * psi.grid.cell_measure).ravel()


def build_cut_graph(
    phi: FinslerIntegrand, psi: FidelityTerm, t: float
) -> nx.DiGraph:
    """The s-t graph whose minimum cuts (source side = E) minimize the
    geometric energy at level t, up to a constant.
    """
    graph = nx.DiGraph()
    graph.add_nodes_from(range(phi.grid.size))
    graph.add_nodes_from(("s", "t"))
    forcing = _terminal_forcing(psi, t)
    for node in np.flatnonzero(forcing < 0):
        graph.add_edge("s", int(node), capacity=float(-forcing[node]))
    for node in np.flatnonzero(forcing > 0):
        graph.add_edge(int(node), "t", capacity=float(forcing[node]))
    for _, sources, targets, capacities in _neighbour_capacities(phi):
        for a, b, c in zip(
            sources.tolist(), targets.tolist(), capacities.tolist()
        ):
            for head, tail in ((a, b), (b, a)):
                if graph.has_edge(head, tail):
                    graph[head][tail]["capacity"] += c
                else:
                    graph.add_edge(head, tail, capacity=c)
    return graph


def _source_reachable(residual: nx.DiGraph, tol: float) -> set:
    seen = {"s"}
    queue = deque(["s"])
    while queue:
        node = queue.popleft()
        for neighbour, attr in residual[node].items():
            if neighbour in seen:
                continue
            if attr["capacity"] - attr["flow"] > tol:
                seen.add(neighbour)
                queue.append(neighbour)
    return seen


def mincut_solve(
    phi: FinslerIntegrand, psi: FidelityTerm, t: float
) -> BinaryField:
    """The minimal global minimizer of the manhattan geometric energy.

    Runs Boykov-Kolmogorov max-flow and returns the nodes reachable from the
    source in the residual graph, which is the smallest minimum cut.

    Raises:
        ValueError: If ``phi`` is elliptic (not representable with a
            4-connected graph).
        SizeLimitError: If the grid has more than 512 x 512 nodes.
    """
    grid = psi.grid
    grid.check_same(phi.grid)
    if phi.kind == "elliptic":
        raise ValueError("Min-cut needs an isotropic or weighted integrand")
    if grid.size > MINCUT_MAX_SIZE:
        raise SizeLimitError(
            f"Min-cut is limited to {MINCUT_MAX_SIZE} nodes, got {grid.size}"
        )
    graph = build_cut_graph(phi, psi, t)
    membership = np.zeros(grid.size, dtype=bool)
    if graph.number_of_edges() and graph.degree("s") and graph.degree("t"):
        residual = boykov_kolmogorov(graph, "s", "t", capacity="capacity")
        max_capacity = max(c for _, _, c in graph.edges(data="capacity"))
        reachable = _source_reachable(residual, 1e-12 * max_capacity)
        nodes = [n for n in reachable if n != "s"]
        membership[nodes] = True
    elif graph.degree("s"):
        # no sink edges: every node prefers E, and E = everything has no
        # perimeter
        membership[:] = True
    logger.debug(
        "Min-cut at level %.6g selected %d of %d nodes",
        t,
        int(membership.sum()),
        grid.size,
    )
    return BinaryField(grid=grid, membership=membership.reshape(grid.shape))


class GeometricMinimum(BaseModel):
    """All minimizers of a small geometric problem, summarized."""

    energy: float
    minimal: BinaryField
    maximal: BinaryField
    minimizer_count: int


def all_subsets(
    phi: FinslerIntegrand, norm: GradientNorm = "manhattan"
) -> tuple[np.ndarray, np.ndarray]:
    """Every subset of a grid with at most 16 cells and its perimeter.

    Subset k contains cell j (in C order) iff bit j of k is set.

    Raises:
        SizeLimitError: On larger grids.
    """
    grid = phi.grid
    if grid.size > EXHAUSTIVE_MAX_CELLS:
        raise SizeLimitError(
            f"Exhaustive search is limited to {EXHAUSTIVE_MAX_CELLS} cells, "
            f"got {grid.size}"
        )
    codes = np.arange(2**grid.size)
    flat = ((codes[:, None] >> np.arange(grid.size)) & 1).astype(bool)
    if norm == "manhattan" and phi.kind != "elliptic":
        perimeter = np.zeros(len(flat))
        for _, sources, targets, capacities in _neighbour_capacities(phi):
            cut = flat[:, sources] != flat[:, targets]
            perimeter += cut @ capacities
    else:
        perimeter = np.array(
            [
                weighted_perimeter(
                    BinaryField(grid=grid, membership=m.reshape(grid.shape)),
                    phi,
                    norm,
                )
                for m in flat
            ]
        )
    return flat.reshape(-1, *grid.shape), perimeter


def max_submodularity_excess(
    phi: FinslerIntegrand, norm: GradientNorm = "manhattan"
) -> float:
    """max over all pairs (E, F) of P(E ∩ F) + P(E ∪ F) - P(E) - P(F),
    by enumeration. Nonpositive for a submodular perimeter.
    """
    _, perimeter = all_subsets(phi, norm)
    codes = np.arange(len(perimeter))
    worst = -np.inf
    for a in codes:
        excess = (
            perimeter[a & codes]
            + perimeter[a | codes]
            - perimeter[a]
            - perimeter
        )
        worst = max(worst, float(np.max(excess)))
    return worst


def exhaustive_geometric_minimum(
    phi: FinslerIntegrand,
    psi: FidelityTerm,
    t: float,
    norm: GradientNorm = "manhattan",
    tol: float = 1e-12,
) -> GeometricMinimum:
    """Enumerate every subset of a grid with at most 16 cells.

    Raises:
        SizeLimitError: On larger grids.
    """
    grid = psi.grid
    grid.check_same(phi.grid)
    masks, perimeter = all_subsets(phi, norm)
    forcing = psi.derivative(t) * grid.cell_measure
    volume = np.sum(masks * forcing, axis=tuple(range(1, grid.ndim + 1)))
    energies = perimeter + volume
    best = float(np.min(energies))
    optimal = masks[energies <= best + tol * max(1.0, abs(best))]
    return GeometricMinimum(
        energy=best,
        minimal=BinaryField(grid=grid, membership=np.all(optimal, axis=0)),
        maximal=BinaryField(grid=grid, membership=np.any(optimal, axis=0)),
        minimizer_count=len(optimal),
    )


# -- families -----------------------------------------------------------------


class LevelSetFamily(BaseModel):
    """Sets E_t over a sorted sample of levels."""

    levels: list[float]
    sets: list[BinaryField]

    @model_validator(mode="after")
    def _check(self) -> LevelSetFamily:
        if len(self.levels) != len(self.sets):
            raise ValueError("Need exactly one set per level")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ValueError("Levels must be strictly increasing")
        if self.sets:
            grid = self.sets[0].grid
            for s in self.sets[1:]:
                grid.check_same(s.grid)
        return self

    @classmethod
    def from_superlevels(
        cls, u: ScalarField, levels: Sequence[float]
    ) -> LevelSetFamily:
        levels = [float(t) for t in levels]
        return cls(levels=levels, sets=[superlevel(u, t) for t in levels])

    @classmethod
    def from_mincut(
        cls,
        phi: FinslerIntegrand,
        psi: FidelityTerm,
        levels: Sequence[float],
        max_workers: int = 1,
    ) -> LevelSetFamily:
        """Solve the geometric problem independently at every level.

        With ``max_workers`` > 1 the levels are spread over that many worker
        processes; the cuts share no state.
        """
        levels = [float(t) for t in levels]
        solve = partial(mincut_solve, phi, psi)
        if max_workers > 1 and len(levels) > 1:
            with ProcessPoolExecutor(max_workers=max_workers) as pool:
                sets = list(pool.map(solve, levels))
        else:
            sets = [solve(t) for t in levels]
        return cls(levels=levels, sets=sets)

    def reconstruct(self) -> ScalarField:
        """Layer-cake reconstruction v(x) = max{t : x ∈ E_t}; points in no
        set get the lowest level.
        """
        if not self.sets:
            raise ValueError("Cannot reconstruct from an empty family")
        grid = self.sets[0].grid
        values = np.full(grid.shape, self.levels[0])
        for t, E in zip(self.levels, self.sets):
            values = np.where(E.membership, np.maximum(values, t), values)
        return ScalarField(grid=grid, values=values)


def nesting_violations(family: LevelSetFamily) -> list[tuple[float, float]]:
    """Consecutive level pairs (t, t') with E_t' not contained in E_t."""
    return [
        (t, t_next)
        for t, t_next, E, E_next in zip(
            family.levels,
            family.levels[1:],
            family.sets,
            family.sets[1:],
        )
        if not E_next.issubset(E)
    ]


def check_nested(family: LevelSetFamily) -> bool:
    """True iff E_t' ⊆ E_t for every consecutive pair t < t'."""
    return not nesting_violations(family)


# -- verification -------------------------------------------------------------


class LevelRecord(BaseModel):
    level: float
    superlevel_energy: float
    mincut_energy: float
    excess: float = Field(
        description="Superlevel energy minus min-cut energy."
    )
    slack: float
    tie_prone: bool
    sets_equal: bool
    passed: bool


class LevelsetReport(BaseModel):
    """Per-level comparison of {u > t} against the min-cut minimizer."""

    records: list[LevelRecord]
    gap: float = Field(
        description="Absolute duality gap of u used for the slack."
    )
    sup_error_bound: float = Field(
        description="Bound on |u - u*| derived from the gap."
    )
    nested: bool
    passed: bool

    @property
    def max_excess(self) -> float:
        return max((r.excess for r in self.records), default=0.0)

    @property
    def tie_prone_levels(self) -> list[float]:
        return [r.level for r in self.records if r.tie_prone]


def sup_error_bound(psi: FidelityTerm, gap: float) -> float:
    """δ = sqrt(2 gap / (strong convexity · cell measure)), a pointwise bound
    on |u - u*| for an output u with absolute duality gap ``gap``.
    """
    if psi.strong_convexity <= 0:
        return np.inf
    scale = psi.strong_convexity * psi.grid.cell_measure
    return float(np.sqrt(2.0 * max(gap, 0.0) / scale))


def _incident_capacity(phi: FinslerIntegrand) -> np.ndarray:
    total = np.zeros(phi.grid.size)
    for _, sources, targets, capacities in _neighbour_capacities(phi):
        np.add.at(total, sources, capacities)
        np.add.at(total, targets, capacities)
    return total.reshape(phi.grid.shape)


def verify_levelset_characterization(
    u: ScalarField,
    phi: FinslerIntegrand,
    psi: FidelityTerm,
    levels: Sequence[float],
    gap: float = 0.0,
    max_workers: int = 1,
) -> LevelsetReport:
    """Check that every superlevel set of an approximate minimizer solves the
    geometric problem at its level.

    The slack at level t accounts for the pixels whose side of t the solver
    accuracy cannot decide: with strong convexity 1, |u - u*| <= δ =
    sqrt(2 gap / cell measure) pointwise, and each pixel with |u - t| <= δ can
    change the energy by at most its forcing plus its incident edge
    capacities.

    Args:
        u (ScalarField): Output of a manhattan solve.
        phi (FinslerIntegrand): The weighted integrand of that solve.
        psi (FidelityTerm): The fidelity of that solve.
        levels (Sequence[float]): Levels to check.
        gap (float, optional): Absolute duality gap certified for u.
            Defaults to 0.
        max_workers (int, optional): Processes for the min-cut solves.

    Returns:
        LevelsetReport: Per-level energies, slacks and tie flags.
    """
    grid = u.grid
    delta = sup_error_bound(psi, gap)
    incident = _incident_capacity(phi)
    mincut = LevelSetFamily.from_mincut(phi, psi, levels, max_workers)
    records = []
    for t, E_cut in zip(mincut.levels, mincut.sets):
        E_u = superlevel(u, t)
        e_u = geometric_energy(E_u, phi, psi, t)
        e_cut = geometric_energy(E_cut, phi, psi, t)
        forcing = np.abs(psi.derivative(t)) * grid.cell_measure
        ambiguous = np.abs(u.values - t) <= delta
        scale = max(1.0, abs(e_u), abs(e_cut))
        slack = float(np.sum((forcing + incident)[ambiguous])) + 1e-9 * scale
        records.append(
            LevelRecord(
                level=t,
                superlevel_energy=e_u,
                mincut_energy=e_cut,
                excess=e_u - e_cut,
                slack=slack,
                tie_prone=bool(
                    np.any(np.abs(u.values - t) <= max(delta, TIE_TOL))
                ),
                sets_equal=E_u == E_cut,
                passed=e_u - e_cut <= slack,
            )
        )
    nested = check_nested(mincut)
    report = LevelsetReport(
        records=records,
        gap=gap,
        sup_error_bound=delta,
        nested=nested,
        passed=nested and all(r.passed for r in records),
    )
    logger.info(
        "Level-set check over %d levels: max excess %.3e, passed=%s",
        len(records),
        report.max_excess,
        report.passed,
    )
    return report


def untied_levels(
    u: ScalarField, levels: Sequence[float], margin: float
) -> list[float]:
    """Move each level that comes within ``margin`` of a value of u to the
    nearest midpoint between consecutive values of u lying further than
    ``margin`` from both. Levels with no such midpoint are dropped.

    Returns:
        list[float]: Sorted distinct levels, all at distance > margin from u.
    """
    values = np.unique(u.values)
    gaps = np.diff(values)
    midpoints = (values[:-1] + values[1:])[gaps > 2 * margin] / 2
    moved = set()
    for t in levels:
        t = float(t)
        if np.min(np.abs(values - t)) > margin:
            moved.add(t)
        elif midpoints.size:
            moved.add(float(midpoints[np.argmin(np.abs(midpoints - t))]))
        else:
            logger.debug("No untied level near %.6g", t)
    return sorted(moved)


class LayerCakeReport(BaseModel):
    """Sup-norm distance between u and the layer-cake reconstruction from
    the min-cut family.
    """

    levels: int
    spacing: float
    sup_error: float
    tolerance: float
    passed: bool


def check_layer_cake(
    u: ScalarField,
    phi: FinslerIntegrand,
    psi: FidelityTerm,
    count: int = 256,
    gap: float = 0.0,
    max_workers: int = 1,
) -> LayerCakeReport:
    """Rebuild a minimizer from min-cut sets at ``count`` levels spanning
    the range of the datum and compare it against u.

    The reconstruction lies within one level spacing below the exact
    minimizer, which is within δ = sqrt(2 gap / cell measure) of u, so the
    tolerance is max(spacing, 1e-3) + δ.

    Args:
        u (ScalarField): Output of a manhattan solve.
        phi (FinslerIntegrand): The weighted integrand of that solve.
        psi (FidelityTerm): The fidelity of that solve.
        count (int, optional): Number of levels. Defaults to 256.
        gap (float, optional): Absolute duality gap certified for u.
        max_workers (int, optional): Processes for the min-cut solves.
    """
    if count < 2:
        raise ValueError(f"Need at least two levels, got {count}")
    low, high = float(psi.g.values.min()), float(psi.g.values.max())
    if high <= low:
        high = low + 1.0
    levels = np.linspace(low, high, count)
    spacing = float(levels[1] - levels[0])
    family = LevelSetFamily.from_mincut(phi, psi, levels, max_workers)
    v = family.reconstruct()
    sup_error = float(np.max(np.abs(v.values - u.values)))
    delta = sup_error_bound(psi, gap)
    tolerance = max(spacing, 1e-3) + delta
    logger.info(
        "Layer cake over %d levels: sup error %.3e (tolerance %.3e)",
        count,
        sup_error,
        tolerance,
    )
    return LayerCakeReport(
        levels=count,
        spacing=spacing,
        sup_error=sup_error,
        tolerance=tolerance,
        passed=sup_error <= tolerance,
    )
