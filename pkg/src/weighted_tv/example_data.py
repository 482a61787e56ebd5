import logging
from typing import Callable

import numpy as np

from .backend.grid import Grid, ScalarField

logger = logging.getLogger(__name__)


def unit_interval_grid(n: int = 1000, length: float = 1.0) -> Grid:
    """A cell-centered 1D grid on (0, length): node i sits at (i + 1/2) h,
    so edge i sits at (i + 1) h.
    """
    h = length / n
    return Grid(shape=(n,), spacing=h, origin=(0.5 * h,))


def symmetric_grid(n: int = 999, half_width: float = 1.0) -> Grid:
    """A cell-centered 1D grid on (-half_width, half_width). With odd n a
    node sits at 0 and no edge midpoint does.
    """
    h = 2 * half_width / n
    return Grid(shape=(n,), spacing=h, origin=(-half_width + 0.5 * h,))


def stripe_grid(n: int = 256) -> Grid:
    """The periodic n x n grid on [-pi, pi) x [0, 2 pi), axes (y, x)."""
    h = 2 * np.pi / n
    return Grid(
        shape=(n, n), spacing=h, boundary="periodic", origin=(-np.pi, 0.0)
    )


def fig1(grid: Grid | None = None) -> ScalarField:
    """A piecewise smooth 1D signal with interior extrema and two jumps.

    Args:
        grid (Grid, optional): A 1D grid on (0, 1). Defaults to 1000 cells.

    Returns:
        ScalarField: The datum.
    """
    grid = grid or unit_interval_grid()
    (x,) = grid.node_coordinates()
    values = (
        0.6 * np.sin(3 * np.pi * x)
        + 0.3 * x
        + 0.8 * (x > 0.35)
        - 1.0 * (x > 0.72)
    )
    return ScalarField(grid=grid, values=values)


def ramp(grid: Grid | None = None, slope: float = 10.0) -> ScalarField:
    """g = slope * x."""
    grid = grid or unit_interval_grid(1000, 2.0)
    return ScalarField(grid=grid, values=slope * grid.node_coordinates()[-1])


def sine(
    grid: Grid | None = None, frequency: float = 1.0, amplitude: float = 1.0
) -> ScalarField:
    """g = amplitude * sin(2 pi frequency x)."""
    grid = grid or unit_interval_grid()
    x = grid.node_coordinates()[-1]
    return ScalarField(
        grid=grid, values=amplitude * np.sin(2 * np.pi * frequency * x)
    )


def staircase(
    grid: Grid | None = None, steps: int = 4, seed: int | None = None
) -> ScalarField:
    """A monotone staircase from 0 to 1 along x.

    Without a seed the steps are equally long and equally high; with a seed
    both the step positions and the increments are random.
    """
    grid = grid or unit_interval_grid(100)
    n = grid.shape[-1]
    if seed is None:
        edges = np.linspace(0, n, steps + 1)[1:-1].round().astype(int)
        levels = np.linspace(0.0, 1.0, steps)
    else:
        rng = np.random.default_rng(seed)
        edges = np.sort(
            rng.choice(np.arange(2, n - 1), steps - 1, replace=False)
        )
        rises = rng.uniform(0.2, 1.0, steps - 1)
        levels = np.concatenate([[0.0], np.cumsum(rises)])
        levels /= levels[-1]
    profile = levels[np.searchsorted(edges, np.arange(n), side="right")]
    values = np.broadcast_to(profile, grid.shape).copy()
    return ScalarField(grid=grid, values=values)


def cos_stripe(grid: Grid | None = None) -> ScalarField:
    """g = (2 + cos x) on y > 0 and 0 elsewhere."""
    grid = grid or stripe_grid()
    y, x = grid.node_coordinates()
    return ScalarField(grid=grid, values=(2 + np.cos(x)) * (y > 0))


def smooth_random(
    grid: Grid, seed: int = 0, modes: int = 3, amplitude: float = 1.0
) -> ScalarField:
    """A sum of random low-frequency cosines, scaled to the given amplitude."""
    rng = np.random.default_rng(seed)
    coords = grid.node_coordinates()
    lengths = [n * h for n, h in zip(grid.shape, grid.spacing)]
    values = np.zeros(grid.shape)
    for _ in range(modes):
        phase = rng.uniform(0, 2 * np.pi)
        freqs = rng.integers(0, 3, size=grid.ndim)
        arg = sum(
            np.pi * f * c / length
            for f, c, length in zip(freqs, coords, lengths)
        )
        values += rng.normal() * np.cos(arg + phase)
    peak = np.max(np.abs(values))
    if peak > 0:
        values *= amplitude / peak
    return ScalarField(grid=grid, values=values)


def piecewise_constant_random(
    grid: Grid, seed: int = 0, n_values: int = 4, blocks: int = 3
) -> ScalarField:
    """Blocks of constant value drawn from ``n_values`` distinct levels.

    In 1D the blocks are random intervals; in 2D a random coarse label image
    of ``blocks`` x ``blocks`` cells is stretched over the grid.
    """
    if not 1 <= n_values <= 8:
        raise ValueError("Between 1 and 8 distinct values are supported")
    rng = np.random.default_rng(seed)
    picks = rng.choice(np.arange(1, 17), n_values, replace=False)
    levels = np.sort(picks) / 8.0
    if grid.ndim == 1:
        n = grid.shape[0]
        n_cuts = max(min(blocks, n) - 1, 1)
        cuts = np.sort(rng.choice(np.arange(1, n), n_cuts, replace=False))
        labels = rng.integers(0, n_values, size=cuts.size + 1)
        block = np.searchsorted(cuts, np.arange(n), side="right")
        values = levels[labels[block]]
    else:
        coarse = rng.integers(0, n_values, size=(blocks, blocks))
        rows = np.arange(grid.shape[0]) * blocks // grid.shape[0]
        cols = np.arange(grid.shape[1]) * blocks // grid.shape[1]
        values = levels[coarse[np.ix_(rows, cols)]]
    return ScalarField(grid=grid, values=values)


DATUM_PRESETS: dict[str, Callable[..., ScalarField]] = {
    "fig1": fig1,
    "ramp": ramp,
    "sine": sine,
    "staircase": staircase,
    "cos_stripe": cos_stripe,
    "smooth_random": smooth_random,
    "piecewise_constant_random": piecewise_constant_random,
}


def get_datum(name: str, grid: Grid | None = None, **params) -> ScalarField:
    """Build a named datum, on ``grid`` when given.

    Raises:
        KeyError: If no preset of that name exists.
    """
    try:
        factory = DATUM_PRESETS[name]
    except KeyError as e:
        raise KeyError(
            f"Unknown datum preset {name!r}, expected one of "
            f"{sorted(DATUM_PRESETS)}"
        ) from e
    if grid is not None:
        params["grid"] = grid
    logger.debug("Building datum %s with %s", name, params)
    return factory(**params)
