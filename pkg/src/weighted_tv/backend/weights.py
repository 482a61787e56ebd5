"""Closed-form weight functions w(x) selectable by name.

Presets are evaluated analytically wherever the discretization needs them
(edge midpoints, stencil centers, nodes), so a figure run is reproducible
bit for bit. One-dimensional presets are functions of the last coordinate,
which is x on both 1D and 2D grids.
"""

from __future__ import annotations

import logging
from typing import Callable

import numpy as np
from pydantic import BaseModel, Field

from .grid import Grid, ScalarField

logger = logging.getLogger(__name__)

Coordinates = tuple[np.ndarray, ...]


class WeightPreset(BaseModel):
    """A named weight with optional analytic derivative (along x)."""

    name: str
    description: str = ""
    function: Callable[[Coordinates], np.ndarray]
    derivative: Callable[[Coordinates], np.ndarray] | None = Field(
        None,
        description="Analytic partial derivative along x, where it exists.",
    )
    holder_exponent: float | None = Field(
        None,
        description="Hölder exponent of w. Metadata only.",
    )
    lipschitz: bool = True
    satisfies_positivity: bool = Field(
        True,
        description="False for weights that vanish or blow up on the domain, "
        "which fall outside the positive-and-bounded hypothesis.",
    )

    def __call__(self, coordinates: Coordinates) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.asarray(self.function(coordinates), dtype=float)

    def sample_nodes(self, grid: Grid) -> ScalarField:
        return ScalarField(grid=grid, values=self(grid.node_coordinates()))


def _sqrt_kink(coords: Coordinates) -> np.ndarray:
    x = coords[-1]
    return np.where(x <= 1, np.sqrt(np.clip(x, 0, None)), x) + 0.2


def _sqrt_kink_derivative(coords: Coordinates) -> np.ndarray:
    x = coords[-1]
    with np.errstate(divide="ignore"):
        left = 0.5 / np.sqrt(np.clip(x, 0, None))
    return np.where(x <= 1, left, 1.0)


def _square_kink(coords: Coordinates) -> np.ndarray:
    x = coords[-1]
    return np.where(x <= 1, x**2, x) + 0.2


def _square_kink_derivative(coords: Coordinates) -> np.ndarray:
    x = coords[-1]
    return np.where(x <= 1, 2 * x, 1.0)


def _power(exponent: float) -> Callable[[Coordinates], np.ndarray]:
    def weight(coords: Coordinates) -> np.ndarray:
        return np.abs(coords[-1]) ** exponent

    return weight


def constant(value: float = 1.0) -> WeightPreset:
    if value <= 0:
        raise ValueError(f"Constant weight must be positive, got {value}")
    return WeightPreset(
        name="constant",
        description=f"w = {value}",
        function=lambda coords: np.full(np.shape(coords[0]), float(value)),
        derivative=lambda coords: np.zeros(np.shape(coords[0])),
        holder_exponent=1.0,
    )


def smooth_sin(offset: float = 2.0, amplitude: float = 1.0) -> WeightPreset:
    if amplitude >= offset:
        raise ValueError(
            "smooth_sin needs offset > amplitude to stay positive"
        )
    return WeightPreset(
        name="smooth_sin",
        description=f"w = {offset} + {amplitude} sin(x)",
        function=lambda coords: offset + amplitude * np.sin(coords[-1]),
        derivative=lambda coords: amplitude * np.cos(coords[-1]),
        holder_exponent=1.0,
    )


def fig2_sqrt() -> WeightPreset:
    return WeightPreset(
        name="fig2_sqrt",
        description="w = sqrt(x) for x <= 1, x for x > 1, plus 0.2",
        function=_sqrt_kink,
        derivative=_sqrt_kink_derivative,
        holder_exponent=0.5,
        lipschitz=False,
    )


def fig3_square() -> WeightPreset:
    return WeightPreset(
        name="fig3_square",
        description="w = x**2 for x <= 1, x for x > 1, plus 0.2",
        function=_square_kink,
        derivative=_square_kink_derivative,
        holder_exponent=1.0,
    )


def fig4_holder() -> WeightPreset:
    return WeightPreset(
        name="fig4_holder",
        description="w = |x|**(1/10)",
        function=_power(0.1),
        holder_exponent=0.1,
        lipschitz=False,
        satisfies_positivity=False,
    )


def fig5_singular() -> WeightPreset:
    return WeightPreset(
        name="fig5_singular",
        description="w = |x|**(-1/10)",
        function=_power(-0.1),
        lipschitz=False,
        satisfies_positivity=False,
    )


WEIGHT_PRESETS: dict[str, Callable[..., WeightPreset]] = {
    "constant": constant,
    "smooth_sin": smooth_sin,
    "fig2_sqrt": fig2_sqrt,
    "fig3_square": fig3_square,
    "fig4_holder": fig4_holder,
    "fig5_singular": fig5_singular,
}


def get_weight_preset(name: str, **params) -> WeightPreset:
    """Look up a weight preset by name.

    Args:
        name (str): One of the keys of WEIGHT_PRESETS.
        **params: Parameters forwarded to the preset factory (e.g. ``value``
            for ``constant``).

    Raises:
        KeyError: If no preset of that name exists.

    Returns:
        WeightPreset: The weight.
    """
    try:
        factory = WEIGHT_PRESETS[name]
    except KeyError as e:
        raise KeyError(
            f"Unknown weight preset {name!r}, expected one of "
            f"{sorted(WEIGHT_PRESETS)}"
        ) from e
    return factory(**params)
