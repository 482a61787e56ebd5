"""Readers and writers for fields: CSV, PGM, PBM and SVG plots.

PGM files written here carry the value range of the field in a header
comment (``# range <min> <max>``), so reading one back recovers values up to
the quantization step. SVG output is a plain path writer: polylines for 1D
profiles and marching-squares level lines for 2D fields.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from pathlib import Path

import numpy as np
from skimage.measure import find_contours

from .grid import Grid, ScalarField
from .levelset import BinaryField

logger = logging.getLogger(__name__)

PALETTE = ("#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad", "#d35400", "#555555")


def _existing(path: str | Path) -> Path:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"No such file: {path}")
    return path


# -- CSV ----------------------------------------------------------------------


def read_field_csv(path: str | Path, grid: Grid | None = None) -> ScalarField:
    """Read a field written one value per line (1D) or as comma-separated
    rows (2D).

    Args:
        path (str | Path): The CSV file.
        grid (Grid, optional): Grid of the field. Defaults to a unit-spacing
            neumann grid of the file's shape.

    Raises:
        FileNotFoundError: If the file does not exist.

    Returns:
        ScalarField: The field.
    """
    values = np.loadtxt(_existing(path), delimiter=",", ndmin=1)
    if grid is None:
        grid = Grid(shape=values.shape)
    return ScalarField(grid=grid, values=values.reshape(grid.shape))


def write_field_csv(field: ScalarField, path: str | Path) -> None:
    np.savetxt(path, field.values, fmt="%.17g", delimiter=",")


def write_table_csv(
    path: str | Path, columns: dict[str, Sequence[float]]
) -> None:
    """Write equally long named columns with a header row."""
    names = list(columns)
    table = np.column_stack(
        [np.asarray(columns[n], dtype=float) for n in names]
    )
    np.savetxt(
        path,
        table,
        fmt="%.17g",
        delimiter=",",
        header=",".join(names),
        comments="",
    )


# -- PGM / PBM ----------------------------------------------------------------


def write_pgm(
    field: ScalarField,
    path: str | Path,
    bits: int = 8,
    value_range: tuple[float, float] | None = None,
) -> None:
    """Write a 2D field as a binary PGM image, rows along axis 0.

    Args:
        field (ScalarField): A 2D field.
        path (str | Path): Output file.
        bits (int, optional): 8 or 16. Defaults to 8.
        value_range (tuple[float, float], optional): Values mapped to black
            and white. Defaults to the field's min and max.
    """
    if field.grid.ndim != 2:
        raise ValueError("PGM output needs a 2D field")
    if bits not in (8, 16):
        raise ValueError(f"PGM depth must be 8 or 16 bits, got {bits}")
    low, high = value_range or (
        float(field.values.min()),
        float(field.values.max()),
    )
    maxval = 2**bits - 1
    span = high - low if high > low else 1.0
    scaled = np.clip((field.values - low) / span, 0.0, 1.0) * maxval
    pixels = np.rint(scaled).astype(">u2" if bits == 16 else np.uint8)
    rows, cols = field.grid.shape
    header = f"P5\n# range {low!r} {high!r}\n{cols} {rows}\n{maxval}\n"
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(pixels.tobytes())


def _read_header(data: bytes, count: int) -> tuple[list[str], list[str], int]:
    """Split the first ``count`` whitespace tokens off a netpbm header,
    collecting comments. Returns (tokens, comments, offset of the raster).
    """
    tokens: list[str] = []
    comments: list[str] = []
    pos = 0
    while len(tokens) < count:
        while data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            end = data.index(b"\n", pos)
            comments.append(data[pos + 1 : end].decode("ascii").strip())
            pos = end + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos].decode("ascii"))
    # exactly one whitespace byte separates the header from the raster
    return tokens, comments, pos + 1


def read_pgm(path: str | Path, grid: Grid | None = None) -> ScalarField:
    """Read a binary PGM image, rescaled by its ``# range`` comment when
    present and to [0, 1] otherwise.

    Raises:
        FileNotFoundError: If the file does not exist.
        ValueError: If the file is not a binary PGM.
    """
    data = _existing(path).read_bytes()
    tokens, comments, offset = _read_header(data, 4)
    magic, cols, rows, maxval = tokens[0], *map(int, tokens[1:])
    if magic != "P5":
        raise ValueError(f"{path} is not a binary PGM file")
    dtype = ">u2" if maxval > 255 else np.uint8
    pixels = np.frombuffer(data, dtype=dtype, count=rows * cols, offset=offset)
    low, high = 0.0, 1.0
    for comment in comments:
        parts = comment.split()
        if len(parts) == 3 and parts[0] == "range":
            low, high = float(parts[1]), float(parts[2])
    values = low + (high - low) * pixels.reshape(rows, cols) / maxval
    return ScalarField(grid=grid or Grid(shape=(rows, cols)), values=values)


def write_pbm(E: BinaryField, path: str | Path) -> None:
    """Write a 2D binary field as a packed PBM image (members are black)."""
    if E.grid.ndim != 2:
        raise ValueError("PBM output needs a 2D field")
    rows, cols = E.grid.shape
    with open(path, "wb") as f:
        f.write(f"P4\n{cols} {rows}\n".encode("ascii"))
        f.write(np.packbits(E.membership, axis=1).tobytes())


def read_pbm(path: str | Path, grid: Grid | None = None) -> BinaryField:
    data = _existing(path).read_bytes()
    tokens, _, offset = _read_header(data, 3)
    if tokens[0] != "P4":
        raise ValueError(f"{path} is not a binary PBM file")
    cols, rows = int(tokens[1]), int(tokens[2])
    packed = np.frombuffer(
        data, dtype=np.uint8, count=rows * ((cols + 7) // 8), offset=offset
    )
    bits = np.unpackbits(packed.reshape(rows, -1), axis=1)[:, :cols]
    return BinaryField(grid=grid or Grid(shape=(rows, cols)), membership=bits)


# -- SVG ----------------------------------------------------------------------


class SvgCanvas:
    """Maps data coordinates into a fixed-size SVG drawing with a margin."""

    def __init__(
        self,
        x_range: tuple[float, float],
        y_range: tuple[float, float],
        width: int = 640,
        height: int = 400,
        margin: int = 40,
    ):
        self.x_range = x_range
        self.y_range = y_range
        self.width = width
        self.height = height
        self.margin = margin
        self.elements: list[str] = []

    def _map(
        self, x: np.ndarray, y: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        (x0, x1), (y0, y1) = self.x_range, self.y_range
        inner_w = self.width - 2 * self.margin
        inner_h = self.height - 2 * self.margin
        px = self.margin + (np.asarray(x) - x0) / ((x1 - x0) or 1.0) * inner_w
        py = self.height - self.margin
        py = py - (np.asarray(y) - y0) / ((y1 - y0) or 1.0) * inner_h
        return px, py

    def polyline(
        self, x: np.ndarray, y: np.ndarray, color: str, width: float = 1.5
    ) -> None:
        px, py = self._map(x, y)
        points = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        self.elements.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" '
            f'stroke-width="{width}"/>'
        )

    def text(
        self, x: float, y: float, label: str, color: str = "#000"
    ) -> None:
        self.elements.append(
            f'<text x="{x:.1f}" y="{y:.1f}" font-size="12" '
            f'font-family="sans-serif" fill="{color}">{label}</text>'
        )

    def frame(self) -> None:
        m = self.margin
        self.elements.append(
            f'<rect x="{m}" y="{m}" width="{self.width - 2 * m}" '
            f'height="{self.height - 2 * m}" fill="none" stroke="#999"/>'
        )
        (x0, x1), (y0, y1) = self.x_range, self.y_range
        bottom = self.height - m + 16
        self.text(m, bottom, f"{x0:.3g}")
        self.text(self.width - m - 24, bottom, f"{x1:.3g}")
        self.text(4, self.height - m, f"{y0:.3g}")
        self.text(4, m + 4, f"{y1:.3g}")

    def save(self, path: str | Path) -> None:
        body = "\n".join(self.elements)
        with open(path, "w") as f:
            f.write(
                '<svg xmlns="http://www.w3.org/2000/svg" '
                f'width="{self.width}" height="{self.height}" '
                f'viewBox="0 0 {self.width} {self.height}">\n{body}\n</svg>\n'
            )


def write_profiles_svg(
    path: str | Path,
    fields: dict[str, ScalarField],
    title: str | None = None,
) -> None:
    """Overlay 1D fields as line plots against x, with a legend."""
    if not fields:
        raise ValueError("Nothing to plot")
    for field in fields.values():
        if field.grid.ndim != 1:
            raise ValueError("Profiles are 1D fields")
    x_all = np.concatenate(
        [f.grid.node_coordinates()[0] for f in fields.values()]
    )
    y_all = np.concatenate([f.values for f in fields.values()])
    pad = 0.05 * (np.ptp(y_all) or 1.0)
    canvas = SvgCanvas(
        (float(x_all.min()), float(x_all.max())),
        (float(y_all.min() - pad), float(y_all.max() + pad)),
    )
    canvas.frame()
    for k, (label, field) in enumerate(fields.items()):
        color = PALETTE[k % len(PALETTE)]
        canvas.polyline(field.grid.node_coordinates()[0], field.values, color)
        x = canvas.margin + 8 + 90 * k
        canvas.text(x, canvas.margin - 8, label, color)
    if title:
        canvas.text(canvas.width / 2 - 60, 16, title)
    canvas.save(path)


def level_lines(
    u: ScalarField, levels: Sequence[float]
) -> list[tuple[float, np.ndarray]]:
    """Marching-squares level lines of a 2D field in physical coordinates.

    Returns:
        list[tuple[float, np.ndarray]]: (level, (k, 2) array of (y, x)
            points) for every connected line.
    """
    grid = u.grid
    if grid.ndim != 2:
        raise ValueError("Level lines need a 2D field")
    origin = np.array([grid.axis_coordinates(a)[0] for a in range(2)])
    spacing = np.asarray(grid.spacing)
    lines = []
    for t in levels:
        for contour in find_contours(u.values, float(t)):
            lines.append((float(t), origin + contour * spacing))
    return lines


def write_level_lines_svg(
    path: str | Path,
    u: ScalarField,
    levels: Sequence[float],
    size: int = 512,
) -> int:
    """Draw the level lines of u over its domain. Returns the number of
    lines drawn.
    """
    grid = u.grid
    lines = level_lines(u, levels)
    y_nodes, x_nodes = (grid.axis_coordinates(a) for a in range(2))
    canvas = SvgCanvas(
        (float(x_nodes[0]), float(x_nodes[-1])),
        (float(y_nodes[0]), float(y_nodes[-1])),
        width=size,
        height=size,
    )
    canvas.frame()
    levels = sorted(levels)
    for t, points in lines:
        k = levels.index(t)
        canvas.polyline(
            points[:, 1], points[:, 0], PALETTE[k % len(PALETTE)], width=1.0
        )
    canvas.save(path)
    logger.debug("Wrote %d level lines to %s", len(lines), path)
    return len(lines)
