"""Experiment configuration: a YAML file with one section per concern,
every field overridable from the command line with ``--section.key=value``.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator

from ..backend.grid import Grid
from ..backend.integrands import GradientNorm
from ..backend.solver_params import SolverParams
from ..backend.verification import VerifyOptions

logger = logging.getLogger(__name__)

FIELD_SUFFIXES = (".csv", ".pgm", ".npy")


class ConfigError(ValueError):
    """A malformed config file or command-line override."""


def _is_path(value: Any) -> bool:
    return isinstance(value, str) and value.lower().endswith(FIELD_SUFFIXES)


class _Section(BaseModel):
    model_config = {"extra": "forbid"}


class ProblemConfig(_Section):
    model: Literal["weighted", "elliptic", "isotropic"] = Field(
        "weighted",
        title="Model",
        description="Anisotropy: w|p|, w sqrt(pᵀAp) or |p|.",
    )
    gradient_norm: GradientNorm = Field(
        "euclidean",
        title="Gradient norm",
        description="Per-pixel (euclidean) or per-edge (manhattan) TV.",
    )
    lam: float = Field(
        1.0,
        gt=0,
        title="Regularization weight",
        description="The integrand is lam * w.",
    )
    fidelity: Literal["quadratic", "power"] = Field(
        "quadratic",
        title="Fidelity",
        description="½(u - g)² or |u - g|^q / q.",
    )
    q: float = Field(
        2.0,
        gt=1,
        title="Exponent",
        description="Exponent of the power fidelity.",
    )
    metric: list[list[float]] = Field(
        [[1.0, 0.0], [0.0, 1.0]],
        title="Metric",
        description="Constant SPD matrix A of the elliptic model.",
    )


class DataConfig(_Section):
    g: str = Field(
        "fig1",
        title="Datum",
        description="Name of a datum preset, or a .csv/.pgm/.npy file.",
    )
    g_params: dict[str, Any] = Field(
        {}, title="Datum parameters", description="Passed to the preset."
    )
    w: str | float = Field(
        1.0,
        title="Weight",
        description="A positive constant, a weight preset name, or a "
        ".csv/.pgm/.npy file of node samples.",
    )
    w_params: dict[str, Any] = Field(
        {}, title="Weight parameters", description="Passed to the preset."
    )
    grid: Grid | None = Field(
        None,
        title="Grid",
        description="Grid of the datum. Defaults to the preset's own grid, "
        "or a unit grid of the file's shape.",
    )

    @field_validator("g", "w")
    @classmethod
    def _file_exists(cls, value):
        if _is_path(value) and not Path(value).expanduser().is_file():
            raise ValueError(f"File {value} does not exist")
        return value


class AnalysisConfig(_Section):
    threshold: float | None = Field(
        None,
        gt=0,
        title="Jump threshold",
        description="Detection threshold. Defaults to the datum's "
        "resolution-based threshold.",
    )
    radius: int = Field(
        1, ge=0, title="Matching radius", description="In edges."
    )
    levels: int = Field(
        8,
        ge=1,
        title="Level lines",
        description="Number of levels drawn as level lines and written as "
        "PBM superlevel sets for 2D outputs.",
    )
    epsilon: float = Field(
        0.05,
        gt=0,
        title="Epsilon",
        description="Height margin of the pairwise jump inclusion in sweeps.",
    )
    lambdas: list[float] = Field(
        [2.0**-k for k in range(9)],
        title="Sweep weights",
        description="Values of lam for the sweep command.",
    )
    verify: VerifyOptions = Field(
        default_factory=VerifyOptions,
        title="Verification",
        description="Options of the property suites.",
    )

    @field_validator("lambdas")
    @classmethod
    def _positive(cls, values):
        if any(v <= 0 for v in values):
            raise ValueError("Sweep weights must be positive")
        return values


class OutputConfig(_Section):
    directory: Path = Field(
        Path("weighted_tv_runs"),
        title="Directory",
        description="Where runs and reports are written.",
    )
    run_name: str = Field("run", title="Run name")
    formats: list[Literal["csv", "pgm", "pbm", "svg", "npy"]] = Field(
        ["csv", "pgm", "svg"],
        title="Formats",
        description="Artifact formats written next to the saved run.",
    )
    pgm_bits: Literal[8, 16] = Field(16, title="PGM depth")

    @field_validator("directory")
    @classmethod
    def _expand_user(cls, value: Path) -> Path:
        return value.expanduser()


class ExperimentConfig(_Section):
    problem: ProblemConfig = Field(default_factory=ProblemConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    solver: SolverParams = Field(default_factory=SolverParams)
    analysis: AnalysisConfig = Field(default_factory=AnalysisConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)


def parse_override(text: str) -> tuple[list[str], Any]:
    """Split ``--section.key=value`` into (["section", "key"], value), with
    the value parsed as YAML.

    Raises:
        ConfigError: If the text is not of that form.
    """
    if not text.startswith("--") or "=" not in text:
        raise ConfigError(f"Expected --section.key=value, got {text!r}")
    dotted, raw = text[2:].split("=", 1)
    keys = dotted.split(".")
    if len(keys) < 2 or not all(keys):
        raise ConfigError(f"Override {text!r} needs a section and a key")
    try:
        value = yaml.safe_load(raw) if raw else None
    except yaml.YAMLError as e:
        raise ConfigError(f"Cannot parse the value of {text!r}: {e}") from e
    return keys, value


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    for text in overrides:
        keys, value = parse_override(text)
        node = raw
        for key in keys[:-1]:
            child = node.setdefault(key, {})
            if not isinstance(child, dict):
                raise ConfigError(f"{'.'.join(keys)} does not name a field")
            node = child
        node[keys[-1]] = value
        logger.debug("Override %s = %r", ".".join(keys), value)
    return raw


def load_config(
    path: str | Path | None = None, overrides: list[str] | None = None
) -> ExperimentConfig:
    """Read a YAML experiment config and apply command-line overrides.

    The ``solver`` section may instead name a YAML file of solver parameters,
    relative to the config file; overrides apply on top of it.

    Raises:
        FileNotFoundError: If ``path`` or the solver file does not exist.
        ConfigError: If the file is not a YAML mapping or an override is
            malformed.
        pydantic.ValidationError: If a value is invalid.
    """
    raw: dict = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"Config not found at {path}")
        with open(path) as f:
            try:
                raw = yaml.safe_load(f) or {}
            except yaml.YAMLError as e:
                raise ConfigError(f"Cannot parse {path}: {e}") from e
        if not isinstance(raw, dict):
            raise ConfigError(f"{path} must hold a mapping of sections")
        solver = raw.get("solver")
        if isinstance(solver, str):
            # a separate solver parameter file, relative to this config
            solver_path = path.parent / Path(solver).expanduser()
            raw["solver"] = SolverParams.from_file(solver_path).model_dump()
    raw = apply_overrides(raw, overrides or [])
    return ExperimentConfig.model_validate(raw)


def describe_validation_error(error: ValidationError) -> str:
    """One line per failing field, as ``dotted.path: message``."""
    lines = []
    for e in error.errors():
        location = ".".join(str(part) for part in e["loc"]) or "<root>"
        lines.append(f"{location}: {e['msg']}")
    return "\n".join(lines)
