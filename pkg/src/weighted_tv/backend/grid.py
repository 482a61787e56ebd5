"""Regular grids, sampled fields and the forward-difference operators that
every energy and solver in the package is built on.

The discrete gradient is the forward difference along each axis divided by
the spacing. Under ``neumann`` boundaries the last edge along an axis does
not exist (its difference is zero); under ``periodic`` boundaries it wraps.
The divergence is the negative adjoint of the gradient, so
``sum(grad(u) * z) == -sum(u * div(z))`` holds to machine precision.
"""

from __future__ import annotations

import logging
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

logger = logging.getLogger(__name__)

Boundary = Literal["neumann", "periodic"]


class GridMismatchError(ValueError):
    """Raised when fields defined on different grids are combined."""


class Grid(BaseModel):
    """A regular 1D or 2D grid. Arrays sampled on a 2D grid are indexed
    (y, x), i.e. axis 0 is the row axis.
    """

    shape: tuple[int, ...] = Field(
        title="Shape", description="Number of nodes along each axis."
    )
    spacing: tuple[float, ...] = Field(
        title="Spacing", description="Node spacing h along each axis."
    )
    boundary: Boundary = Field(
        "neumann",
        title="Boundary",
        description="Boundary condition shared by every axis.",
    )
    origin: tuple[float, ...] | None = Field(
        None,
        title="Origin",
        description="Coordinates of node 0. Defaults to zero on every axis.",
    )
    model_config = {"frozen": True}

    @field_validator("shape", "spacing", "origin", mode="before")
    @classmethod
    def _as_tuple(cls, value):
        if value is None:
            return value
        if np.isscalar(value):
            return (value,)
        return tuple(value)

    @model_validator(mode="before")
    @classmethod
    def _broadcast_spacing(cls, data):
        if isinstance(data, dict):
            shape = data.get("shape")
            spacing = data.get("spacing", 1.0)
            if shape is not None and np.isscalar(spacing):
                ndim = 1 if np.isscalar(shape) else len(shape)
                data = {**data, "spacing": (float(spacing),) * ndim}
        return data

    @model_validator(mode="after")
    def _check(self) -> Grid:
        if self.ndim not in (1, 2):
            raise ValueError(
                f"Only 1D and 2D grids are supported, got {self.ndim}D"
            )
        if len(self.spacing) != self.ndim:
            raise ValueError(
                f"Expected {self.ndim} spacings, got {len(self.spacing)}"
            )
        if any(n < 2 for n in self.shape):
            raise ValueError(f"All extents must be >= 2, got {self.shape}")
        if any(not h > 0 for h in self.spacing):
            raise ValueError(f"Spacing must be positive, got {self.spacing}")
        if self.origin is not None and len(self.origin) != self.ndim:
            raise ValueError(
                f"Expected {self.ndim} origin coordinates, "
                f"got {len(self.origin)}"
            )
        return self

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_measure(self) -> float:
        """Measure of one grid cell (product of spacings)."""
        return float(np.prod(self.spacing))

    @property
    def measure(self) -> float:
        """Total measure |Ω| of the sampled domain."""
        return self.cell_measure * self.size

    @property
    def lipschitz_bound(self) -> float:
        """Analytic bound L on the operator norm of the forward-difference
        gradient, sqrt(sum_a 4 / h_a**2) (sqrt(8)/h in 2D).
        """
        return float(np.sqrt(sum(4.0 / h**2 for h in self.spacing)))

    def _origin(self) -> tuple[float, ...]:
        return self.origin if self.origin is not None else (0.0,) * self.ndim

    def axis_coordinates(self, axis: int, offset: float = 0.0) -> np.ndarray:
        """Coordinates origin + (i + offset) * h along one axis."""
        index = np.arange(self.shape[axis], dtype=float)
        return self._origin()[axis] + (index + offset) * self.spacing[axis]

    def coordinates(
        self, offsets: tuple[float, ...]
    ) -> tuple[np.ndarray, ...]:
        """Full coordinate arrays (one per axis) of the points
        origin + (i + offsets) * h.
        """
        axes = [
            self.axis_coordinates(a, offsets[a]) for a in range(self.ndim)
        ]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def node_coordinates(self) -> tuple[np.ndarray, ...]:
        return self.coordinates((0.0,) * self.ndim)

    def cell_coordinates(self) -> tuple[np.ndarray, ...]:
        """Locations of the per-pixel stencils, offset by half a cell on
        every axis. In 1D these coincide with the edge midpoints.
        """
        return self.coordinates((0.5,) * self.ndim)

    def edge_coordinates(self, axis: int) -> tuple[np.ndarray, ...]:
        """Midpoints of the forward edges along ``axis``."""
        offsets = tuple(0.5 if a == axis else 0.0 for a in range(self.ndim))
        return self.coordinates(offsets)

    def edge_mask(self) -> np.ndarray:
        """Boolean array of shape (ndim, *shape), True where a forward edge
        exists. All edges exist under periodic boundaries.
        """
        mask = np.ones((self.ndim, *self.shape), dtype=bool)
        if self.boundary == "neumann":
            for axis in range(self.ndim):
                index = [slice(None)] * self.ndim
                index[axis] = -1
                mask[(axis, *index)] = False
        return mask

    @property
    def edge_count(self) -> int:
        return int(self.edge_mask().sum())

    def check_same(self, other: Grid) -> None:
        if self != other:
            raise GridMismatchError(f"Grid mismatch: {self} vs {other}")


def _readonly(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=float)
    values.setflags(write=False)
    return values


class ScalarField(BaseModel):
    """Values of u, g or w sampled at the nodes of a grid."""

    grid: Grid
    values: np.ndarray
    # pydantic does not check numpy arrays
    model_config = {"arbitrary_types_allowed": True, "frozen": True}

    @field_validator("values", mode="before")
    @classmethod
    def _as_array(cls, values) -> np.ndarray:
        return _readonly(values)

    @model_validator(mode="after")
    def _check(self) -> ScalarField:
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"Values of shape {self.values.shape} do not match grid "
                f"shape {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("Field values must all be finite")
        return self

    @classmethod
    def constant(cls, grid: Grid, value: float) -> ScalarField:
        return cls(grid=grid, values=np.full(grid.shape, float(value)))

    def with_values(self, values: np.ndarray) -> ScalarField:
        """A new field on the same grid."""
        return ScalarField(grid=self.grid, values=values)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def l2_norm(self) -> float:
        """Discrete L2 norm with the cell measure."""
        return float(
            np.sqrt(np.sum(self.values**2) * self.grid.cell_measure)
        )


class VectorField(BaseModel):
    """One component per axis, stored on the forward-difference edges.
    ``values`` has shape (ndim, *shape); entries that do not correspond to
    an edge (the last slice along an axis under neumann boundaries) are zero.
    """

    grid: Grid
    values: np.ndarray
    model_config = {"arbitrary_types_allowed": True, "frozen": True}

    @field_validator("values", mode="before")
    @classmethod
    def _as_array(cls, values) -> np.ndarray:
        return _readonly(values)

    @model_validator(mode="after")
    def _check(self) -> VectorField:
        expected = (self.grid.ndim, *self.grid.shape)
        if self.values.shape != expected:
            raise ValueError(
                f"Vector field of shape {self.values.shape}, "
                f"expected {expected}"
            )
        if np.any(self.values[~self.grid.edge_mask()] != 0):
            raise ValueError("Vector field is nonzero outside the edge set")
        return self

    @classmethod
    def zeros(cls, grid: Grid) -> VectorField:
        return cls(grid=grid, values=np.zeros((grid.ndim, *grid.shape)))


def forward_gradient(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Forward differences divided by the spacing, shape (ndim, *shape)."""
    grad = np.empty((grid.ndim, *grid.shape))
    for axis, h in enumerate(grid.spacing):
        diff = np.roll(values, -1, axis=axis) - values
        if grid.boundary == "neumann":
            index = [slice(None)] * grid.ndim
            index[axis] = -1
            diff[tuple(index)] = 0.0
        grad[axis] = diff / h
    return grad


def divergence(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Negative adjoint of :func:`forward_gradient`. Entries of ``values``
    outside the edge set are ignored.
    """
    masked = np.where(grid.edge_mask(), values, 0.0)
    div = np.zeros(grid.shape)
    for axis, h in enumerate(grid.spacing):
        component = masked[axis]
        div += (component - np.roll(component, 1, axis=axis)) / h
    return div
