"""Finsler integrands Φ(x, p): isotropic |p|, weighted w(x)|p| and elliptic
w(x) sqrt(pᵀA(x)p), together with their polars and the projection onto the
dual unit ball {q : Φ⁰(x, q) <= 1}.

Two discretizations of ∫Φ(x, Du) are supported. ``euclidean`` assembles the
full forward-difference gradient per pixel and evaluates Φ at the stencil
center. ``manhattan`` sums w|∂_a u| edge by edge with the weight at the edge
midpoint; it is the discrete functional that min-cut solves exactly.
"""

from __future__ import annotations

import logging
from typing import Literal

import numpy as np
from pydantic import BaseModel, model_validator

from .grid import Grid, ScalarField
from .weights import WeightPreset, get_weight_preset

logger = logging.getLogger(__name__)

GradientNorm = Literal["euclidean", "manhattan"]
IntegrandKind = Literal["isotropic", "weighted", "elliptic"]

_NEWTON_ITERS = 100


def _shift(values: np.ndarray, axis: int, grid: Grid) -> np.ndarray:
    """Values at index i + 1 along ``axis``, clamped under neumann."""
    shifted = np.roll(values, -1, axis=axis)
    if grid.boundary == "neumann":
        index = [slice(None)] * values.ndim
        index[axis] = -1
        shifted[tuple(index)] = values[tuple(index)]
    return shifted


def _node_weights_to_edges(w: np.ndarray, grid: Grid) -> np.ndarray:
    return np.stack(
        [0.5 * (w + _shift(w, axis, grid)) for axis in range(grid.ndim)]
    )


def _node_weights_to_cells(w: np.ndarray, grid: Grid) -> np.ndarray:
    cells = w
    for axis in range(grid.ndim):
        cells = 0.5 * (cells + _shift(cells, axis, grid))
    return cells


class FinslerIntegrand(BaseModel):
    """An anisotropy sampled on a grid.

    ``edge_weights`` has shape (ndim, *shape) and holds w at the midpoint of
    every forward edge; ``cell_weights`` holds w at every per-pixel stencil
    center. ``metric`` (elliptic only) holds A(x) with shape (*shape, 2, 2).
    ``bound`` is the growth constant C_Φ.
    """

    kind: IntegrandKind
    grid: Grid
    edge_weights: np.ndarray
    cell_weights: np.ndarray
    metric: np.ndarray | None = None
    bound: float = 1.0
    weight_name: str | None = None
    holder_exponent: float | None = None
    model_config = {"arbitrary_types_allowed": True, "frozen": True}

    @model_validator(mode="after")
    def _check(self) -> FinslerIntegrand:
        grid = self.grid
        if self.edge_weights.shape != (grid.ndim, *grid.shape):
            raise ValueError("Edge weights do not match the grid")
        if self.cell_weights.shape != grid.shape:
            raise ValueError("Cell weights do not match the grid")
        real = self.edge_weights[grid.edge_mask()]
        if not (np.all(real > 0) and np.all(self.cell_weights > 0)):
            raise ValueError("Weights must be positive")
        finite = np.all(np.isfinite(real)) and np.all(
            np.isfinite(self.cell_weights)
        )
        if not finite:
            raise ValueError("Weights must be finite")
        if self.kind == "elliptic":
            if grid.ndim != 2:
                raise ValueError("Elliptic integrands are only defined in 2D")
            if self.metric is None or self.metric.shape != (*grid.shape, 2, 2):
                raise ValueError(
                    "Elliptic integrands need a (*shape, 2, 2) metric"
                )
            if not np.allclose(self.metric, np.swapaxes(self.metric, -1, -2)):
                raise ValueError("Metric must be symmetric")
            if np.min(np.linalg.eigvalsh(self.metric)) <= 0:
                raise ValueError("Metric must be positive definite")
        for array in (self.edge_weights, self.cell_weights, self.metric):
            if array is not None:
                array.setflags(write=False)
        return self

    # -- construction -------------------------------------------------------

    @classmethod
    def isotropic(cls, grid: Grid) -> FinslerIntegrand:
        return cls(
            kind="isotropic",
            grid=grid,
            edge_weights=np.ones((grid.ndim, *grid.shape)),
            cell_weights=np.ones(grid.shape),
        )

    @classmethod
    def weighted(
        cls,
        grid: Grid,
        weight: float | str | WeightPreset | ScalarField,
    ) -> FinslerIntegrand:
        """Φ(x, p) = w(x)|p|.

        Args:
            grid (Grid): The grid to sample on.
            weight (float | str | WeightPreset | ScalarField): A positive
                constant, a preset (or its name) evaluated analytically, or
                node samples that are averaged onto edges and cells.

        Returns:
            FinslerIntegrand: The weighted integrand.
        """
        edges, cells, name, holder = cls._sample_weight(grid, weight)
        return cls(
            kind="weighted",
            grid=grid,
            edge_weights=edges,
            cell_weights=cells,
            bound=_weight_bound(edges[grid.edge_mask()], cells),
            weight_name=name,
            holder_exponent=holder,
        )

    @classmethod
    def from_edge_weights(
        cls, grid: Grid, edge_weights: np.ndarray
    ) -> FinslerIntegrand:
        """A 1D weighted integrand with one weight per edge."""
        if grid.ndim != 1:
            raise ValueError("Per-edge weights are only accepted in 1D")
        edge_weights = np.asarray(edge_weights, dtype=float).ravel()
        n = grid.shape[0]
        n_edges = n if grid.boundary == "periodic" else n - 1
        if edge_weights.size != n_edges:
            raise ValueError(
                f"Expected {n_edges} edge weights, got {edge_weights.size}"
            )
        if np.any(edge_weights <= 0):
            raise ValueError("Edge weights must be positive")
        padded = np.ones(n)
        padded[:n_edges] = edge_weights
        if n_edges < n:
            padded[-1] = edge_weights[-1]
        return cls(
            kind="weighted",
            grid=grid,
            edge_weights=padded[np.newaxis],
            cell_weights=padded.copy(),
            bound=_weight_bound(edge_weights, edge_weights),
        )

    @classmethod
    def elliptic(
        cls,
        grid: Grid,
        weight: float | str | WeightPreset | ScalarField,
        metric: np.ndarray,
    ) -> FinslerIntegrand:
        """Φ(x, p) = w(x) sqrt(pᵀA(x)p) on a 2D grid.

        Args:
            grid (Grid): A 2D grid.
            weight: As for :meth:`weighted`.
            metric (np.ndarray): A symmetric positive-definite 2x2 matrix, or
                one per stencil center with shape (*shape, 2, 2).

        Returns:
            FinslerIntegrand: The elliptic integrand.
        """
        metric = np.asarray(metric, dtype=float)
        if metric.shape == (2, 2):
            metric = np.broadcast_to(metric, (*grid.shape, 2, 2)).copy()
        edges, cells, name, holder = cls._sample_weight(grid, weight)
        bound = _elliptic_bound(cells, metric)
        return cls(
            kind="elliptic",
            grid=grid,
            edge_weights=edges,
            cell_weights=cells,
            metric=metric,
            bound=bound,
            weight_name=name,
            holder_exponent=holder,
        )

    def scaled(self, factor: float) -> FinslerIntegrand:
        """The integrand factor * Φ, e.g. λ w(x)|p| from w(x)|p|."""
        if not factor > 0:
            raise ValueError(f"Scale factor must be positive, got {factor}")
        edges = self.edge_weights * factor
        cells = self.cell_weights * factor
        if self.kind == "elliptic":
            bound = _elliptic_bound(cells, self.metric)
        else:
            bound = _weight_bound(edges[self.grid.edge_mask()], cells)
        return self.model_copy(
            update={
                "edge_weights": edges,
                "cell_weights": cells,
                "bound": bound,
            }
        )

    @staticmethod
    def _sample_weight(grid: Grid, weight):
        name = None
        holder = None
        if isinstance(weight, str):
            weight = get_weight_preset(weight)
        if isinstance(weight, WeightPreset):
            name = weight.name
            holder = weight.holder_exponent
            edges = np.stack(
                [weight(grid.edge_coordinates(a)) for a in range(grid.ndim)]
            )
            cells = weight(grid.cell_coordinates())
        elif isinstance(weight, ScalarField):
            grid.check_same(weight.grid)
            edges = _node_weights_to_edges(weight.values, grid)
            cells = _node_weights_to_cells(weight.values, grid)
        else:
            value = float(weight)
            edges = np.full((grid.ndim, *grid.shape), value)
            cells = np.full(grid.shape, value)
        # edges outside the domain never enter an energy
        edges = np.where(grid.edge_mask(), edges, 1.0)
        return edges, cells, name, holder

    # -- pointwise evaluation ----------------------------------------------

    def _check_norm(self, norm: GradientNorm) -> None:
        if norm == "manhattan" and self.kind == "elliptic":
            raise ValueError(
                "The manhattan discretization needs an isotropic or "
                "weighted integrand"
            )

    def density(
        self, grad: np.ndarray, norm: GradientNorm = "euclidean"
    ) -> np.ndarray:
        """Per-pixel integrand of a gradient field of shape (ndim, *shape)."""
        self._check_norm(norm)
        if norm == "manhattan" or self.grid.ndim == 1:
            return np.sum(self.edge_weights * np.abs(grad), axis=0)
        if self.kind == "elliptic":
            quad = np.einsum("a...,...ab,b...->...", grad, self.metric, grad)
            return self.cell_weights * np.sqrt(np.clip(quad, 0, None))
        return self.cell_weights * np.sqrt(np.sum(grad**2, axis=0))

    def polar_density(
        self, z: np.ndarray, norm: GradientNorm = "euclidean"
    ) -> np.ndarray:
        """Per-pixel Φ⁰ of a dual field; for ``manhattan`` the maximum of
        |z_a| / w_a over the pixel's edges.
        """
        self._check_norm(norm)
        mask = self.grid.edge_mask()
        if norm == "manhattan" or self.grid.ndim == 1:
            ratio = np.where(mask, np.abs(z) / self.edge_weights, 0.0)
            return np.max(ratio, axis=0)
        if self.kind == "elliptic":
            inverse = np.linalg.inv(self.metric)
            quad = np.einsum("a...,...ab,b...->...", z, inverse, z)
            return np.sqrt(np.clip(quad, 0, None)) / self.cell_weights
        return np.sqrt(np.sum(z**2, axis=0)) / self.cell_weights

    def project(
        self, z: np.ndarray, norm: GradientNorm = "euclidean"
    ) -> np.ndarray:
        """Pointwise Euclidean projection onto {Φ⁰(x, ·) <= 1}."""
        self._check_norm(norm)
        mask = self.grid.edge_mask()
        if norm == "manhattan" or self.grid.ndim == 1:
            clipped = np.clip(z, -self.edge_weights, self.edge_weights)
            return np.where(mask, clipped, 0.0)
        if self.kind == "elliptic":
            projected = self._project_ellipse(z)
            inverse = np.linalg.inv(self.metric)
            for axis in range(2):
                # boundary pixels with a single edge: the ball is an interval
                lone = mask[axis] & ~mask[1 - axis]
                limit = self.cell_weights / np.sqrt(inverse[..., axis, axis])
                projected[axis] = np.where(
                    lone, np.clip(z[axis], -limit, limit), projected[axis]
                )
            return np.where(mask, projected, 0.0)
        magnitude = np.sqrt(np.sum(z**2, axis=0))
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(
                magnitude > self.cell_weights,
                self.cell_weights / magnitude,
                1.0,
            )
        return np.where(mask, z * scale, 0.0)

    def _project_ellipse(self, z: np.ndarray) -> np.ndarray:
        # In the eigenbasis of A⁻¹ the ball is sum_i m_i y_i² <= w². The
        # projection is y_i / (1 + ν m_i) with ν >= 0 the root of a convex
        # decreasing secular function; Newton from ν = 0 increases
        # monotonically to it.
        inverse = np.linalg.inv(self.metric)
        m, vectors = np.linalg.eigh(inverse)
        q = np.moveaxis(z, 0, -1)
        y0 = np.einsum("...ba,...b->...a", vectors, q)
        w2 = self.cell_weights**2
        outside = np.sum(m * y0**2, axis=-1) > w2
        nu = np.zeros(self.grid.shape)
        for _ in range(_NEWTON_ITERS):
            denom = 1.0 + nu[..., None] * m
            f = np.sum(m * y0**2 / denom**2, axis=-1) - w2
            if np.all(np.abs(f[outside]) <= 1e-14 * w2[outside]):
                break
            df = -2.0 * np.sum(m**2 * y0**2 / denom**3, axis=-1)
            step = np.where(outside, f / df, 0.0)
            nu = nu - step
        y = y0 / (1.0 + nu[..., None] * m)
        y = np.where(outside[..., None], y, y0)
        projected = np.einsum("...ab,...b->...a", vectors, y)
        projected = np.moveaxis(projected, -1, 0)
        # snap rounding residue back inside the ball
        polar = self.polar_density(projected)
        scale = np.where(polar > 1.0, 1.0 / np.maximum(polar, 1e-300), 1.0)
        return projected * scale


def _weight_bound(edges: np.ndarray, cells: np.ndarray) -> float:
    values = np.concatenate([np.ravel(edges), np.ravel(cells)])
    return max(1.0, float(np.max(values)), float(1.0 / np.min(values)))


def _elliptic_bound(cells: np.ndarray, metric: np.ndarray) -> float:
    # growth of w sqrt(pᵀAp) and the eigenvalue bracket of A itself
    eigenvalues = np.linalg.eigvalsh(metric)
    return max(
        1.0,
        float(np.max(cells * np.sqrt(eigenvalues[..., 1]))),
        float(np.max(1.0 / (cells * np.sqrt(eigenvalues[..., 0])))),
        float(np.sqrt(np.max(eigenvalues))),
        float(1.0 / np.sqrt(np.min(eigenvalues))),
    )


def _pointwise(phi: FinslerIntegrand, x: tuple[int, ...] | int):
    x = (x,) if isinstance(x, (int, np.integer)) else tuple(x)
    weight = float(phi.cell_weights[x])
    metric = phi.metric[x] if phi.kind == "elliptic" else None
    return weight, metric


def eval_phi(
    phi: FinslerIntegrand, x: tuple[int, ...] | int, p: np.ndarray
) -> float:
    """Φ(x, p) at the stencil center of grid index ``x``.

    Args:
        phi (FinslerIntegrand): The integrand.
        x (tuple[int, ...] | int): Grid index.
        p (np.ndarray): A finite vector with one entry per axis.

    Returns:
        float: A value in [|p| / C_Φ, C_Φ |p|].
    """
    weight, metric = _pointwise(phi, x)
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if metric is None:
        return weight * float(np.linalg.norm(p))
    return weight * float(np.sqrt(max(p @ metric @ p, 0.0)))


def eval_polar(
    phi: FinslerIntegrand, x: tuple[int, ...] | int, q: np.ndarray
) -> float:
    """Φ⁰(x, q) = max{p·q : Φ(x, p) <= 1}, in closed form."""
    weight, metric = _pointwise(phi, x)
    q = np.atleast_1d(np.asarray(q, dtype=float))
    if metric is None:
        return float(np.linalg.norm(q)) / weight
    return float(np.sqrt(max(q @ np.linalg.solve(metric, q), 0.0))) / weight


def phi_gradient(
    phi: FinslerIntegrand, x: tuple[int, ...] | int, p: np.ndarray
) -> np.ndarray:
    """∇_pΦ(x, p); the zero vector at p = 0."""
    weight, metric = _pointwise(phi, x)
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if metric is None:
        metric = np.eye(p.size)
    value = np.sqrt(max(p @ metric @ p, 0.0))
    if value == 0:
        return np.zeros_like(p)
    return weight * (metric @ p) / value
