"""The subcommands. Each returns an exit code. All but ``inspect`` take a
validated :class:`ExperimentConfig` and write their artifacts under
``config.output.directory``.
"""

from __future__ import annotations

import json
import logging
import math
from datetime import datetime
from pathlib import Path

import numpy as np
from pydantic import BaseModel

from ..backend.energy import anisotropic_tv, total_energy
from ..backend.fidelity import FidelityError, FidelityTerm
from ..backend.grid import Grid, ScalarField
from ..backend.integrands import FinslerIntegrand
from ..backend.io import (
    read_field_csv,
    read_pgm,
    write_field_csv,
    write_level_lines_svg,
    write_pbm,
    write_pgm,
    write_profiles_svg,
    write_table_csv,
)
from ..backend.jumps import (
    default_threshold,
    detect_jumps,
    epsilon_jump_inclusion_check,
)
from ..backend.levelset import superlevel
from ..backend.solve import SolverDivergedError, minimize
from ..backend.solver_params import SolverParams, StepSizeError
from ..backend.tv_run import STAMP_FORMAT, DenoiseRun
from ..backend.verification import (
    SUITES,
    UnknownSuiteError,
    run_suites,
)
from ..backend.weights import WeightPreset, get_weight_preset
from ..example_data import get_datum
from .config import ExperimentConfig
from .figures import reproduce

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IO = 1
EXIT_NOT_CONVERGED = 2
EXIT_CHECK_FAILED = 3
EXIT_USAGE = 64


class UsageError(ValueError):
    """A violated command precondition."""


class Problem(BaseModel):
    """The datum, the (unscaled) weight and the assembled terms."""

    g: ScalarField
    weight: float | WeightPreset | ScalarField
    phi: FinslerIntegrand
    psi: FidelityTerm
    model_config = {"arbitrary_types_allowed": True}

    def weight_samples(self) -> np.ndarray:
        """Node samples of the weight, for saving with a run."""
        grid = self.g.grid
        if isinstance(self.weight, ScalarField):
            return np.array(self.weight.values)
        if isinstance(self.weight, WeightPreset):
            return np.array(self.weight.sample_nodes(grid).values)
        return np.full(grid.shape, float(self.weight))


def load_field(path: str | Path, grid: Grid | None = None) -> ScalarField:
    path = Path(path).expanduser()
    suffix = path.suffix.lower()
    if suffix == ".csv":
        return read_field_csv(path, grid)
    if suffix == ".pgm":
        return read_pgm(path, grid)
    if not path.is_file():
        raise FileNotFoundError(f"No such file: {path}")
    values = np.load(path)
    return ScalarField(grid=grid or Grid(shape=values.shape), values=values)


def _names_file(value) -> bool:
    return isinstance(value, str) and Path(value).suffix.lower() in (
        ".csv",
        ".pgm",
        ".npy",
    )


def build_problem(
    config: ExperimentConfig, lam: float | None = None
) -> Problem:
    """Assemble g, w, Φ = lam·w·(model) and Ψ from the config.

    Raises:
        KeyError: For an unknown datum or weight preset.
        UsageError: If a preset rejects its parameters.
    """
    data, problem = config.data, config.problem
    if _names_file(data.g):
        g = load_field(data.g, data.grid)
    else:
        try:
            g = get_datum(data.g, data.grid, **data.g_params)
        except TypeError as e:
            raise UsageError(
                f"Bad parameters for datum {data.g!r}: {e}"
            ) from e
    grid = g.grid
    if problem.model == "isotropic":
        weight = 1.0
    elif _names_file(data.w):
        weight = load_field(data.w, grid)
    elif isinstance(data.w, str):
        try:
            weight = get_weight_preset(data.w, **data.w_params)
        except TypeError as e:
            raise UsageError(
                f"Bad parameters for weight {data.w!r}: {e}"
            ) from e
    else:
        weight = float(data.w)
    if problem.model == "elliptic":
        phi = FinslerIntegrand.elliptic(grid, weight, problem.metric)
    else:
        phi = FinslerIntegrand.weighted(grid, weight)
    phi = phi.scaled(problem.lam if lam is None else lam)
    if problem.fidelity == "power":
        psi = FidelityTerm.power(g, problem.q)
    else:
        psi = FidelityTerm.quadratic(g)
    return Problem(g=g, weight=weight, phi=phi, psi=psi)


def solver_params(config: ExperimentConfig) -> SolverParams:
    return config.solver.model_copy(
        update={"gradient_norm": config.problem.gradient_norm}
    )


def _stamp() -> str:
    return datetime.now().strftime(STAMP_FORMAT)


def write_field_artifacts(
    directory: Path,
    name: str,
    field: ScalarField,
    config: ExperimentConfig,
    value_range: tuple[float, float] | None = None,
) -> None:
    """Write a field in the configured formats (svg is handled by callers)."""
    formats = config.output.formats
    if "csv" in formats:
        write_field_csv(field, directory / f"{name}.csv")
    if "npy" in formats:
        np.save(directory / f"{name}.npy", field.values)
    if "pgm" in formats and field.grid.ndim == 2:
        write_pgm(
            field,
            directory / f"{name}.pgm",
            bits=config.output.pgm_bits,
            value_range=value_range,
        )


def level_values(u: ScalarField, count: int) -> list[float]:
    """``count`` levels evenly spaced strictly inside the range of u."""
    low, high = float(u.values.min()), float(u.values.max())
    return list(np.linspace(low, high, count + 2)[1:-1])


def cmd_denoise(config: ExperimentConfig) -> int:
    """Solve the configured problem, save the run and its artifacts.

    Returns:
        int: 0 on convergence, 2 if the solver stopped at max_iters.
    """
    problem = build_problem(config)
    params = solver_params(config)
    u, report = minimize(problem.phi, problem.psi, params)
    energy = total_energy(u, problem.phi, problem.psi, params.gradient_norm)
    run = DenoiseRun(
        run_name=config.output.run_name,
        solver_params=params,
        grid=problem.g.grid,
        g=np.array(problem.g.values),
        w=config.problem.lam * problem.weight_samples(),
        u=np.array(u.values),
        report=report,
    )
    run_dir = run.save(config.output.directory)
    (run_dir / "energy.json").write_text(energy.to_json())

    g = problem.g
    value_range = (float(g.values.min()), float(g.values.max()))
    write_field_artifacts(run_dir, "u", u, config, value_range)
    write_field_artifacts(run_dir, "g", g, config, value_range)
    threshold = config.analysis.threshold or default_threshold(g)
    detect_jumps(u, threshold).to_csv(run_dir / "jumps_u.csv")
    levels = level_values(u, config.analysis.levels)
    if "pbm" in config.output.formats and g.grid.ndim == 2:
        for k, t in enumerate(levels):
            write_pbm(superlevel(u, t), run_dir / f"superlevel_{k:02d}.pbm")
    if "svg" in config.output.formats:
        if g.grid.ndim == 1:
            write_profiles_svg(run_dir / "profiles.svg", {"g": g, "u": u})
        else:
            write_level_lines_svg(run_dir / "level_lines.svg", u, levels)
    logger.info(
        "Run %s: energy %.10g, %s after %d iterations",
        run_dir,
        energy.total,
        run.status,
        report.iterations,
    )
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def cmd_inspect(run_dir: str | Path, delete: bool = False) -> int:
    """Print a saved run's summary and duality gap history as JSON, then
    optionally delete the run.

    Raises:
        UsageError: If the directory name is not a run id.
        FileNotFoundError: If the run files are missing.
    """
    run_dir = Path(run_dir)
    try:
        run = DenoiseRun.load(run_dir, output_required=False)
    except ValueError as e:
        raise UsageError(str(e)) from e
    summary = run.summary()
    if run.report is not None:
        summary["checkpoints"] = [
            c.model_dump() for c in DenoiseRun.load_gaps(run_dir)
        ]
    print(json.dumps(summary, indent=2))
    if delete:
        run.delete(run_dir.parent)
        logger.info("Deleted run %s", run_dir)
    return EXIT_OK


def cmd_verify(config: ExperimentConfig, suite: str) -> int:
    """Run a property suite and write its verdicts as JSON.

    Raises:
        UnknownSuiteError: For a suite outside SUITES and "all".
    """
    if suite != "all" and suite not in SUITES:
        raise UnknownSuiteError(
            f"Unknown suite {suite!r}, expected one of {[*SUITES, 'all']}"
        )
    verdicts = run_suites(suite, config.analysis.verify)
    directory = Path(config.output.directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"verify_{suite}.json"
    payload = [json.loads(v.model_dump_json()) for v in verdicts]
    path.write_text(json.dumps(payload, indent=2))
    for verdict in verdicts:
        print(
            f"{verdict.suite:<12} {'PASS' if verdict.passed else 'FAIL'} "
            f"({verdict.wall_time:.1f} s)"
        )
    logger.info("Wrote verdicts to %s", path)
    return EXIT_OK if all(v.passed for v in verdicts) else EXIT_CHECK_FAILED


def cmd_sweep(
    config: ExperimentConfig, lambdas: list[float] | None = None
) -> int:
    """Solve for every lam, write per-lam jump sets and a summary table, and
    compare consecutive solutions with the ε-jump inclusion check.

    Raises:
        UsageError: With fewer than two distinct values of lam.
    """
    lambdas = sorted(set(lambdas or config.analysis.lambdas), reverse=True)
    if len(lambdas) < 2:
        raise UsageError("A sweep needs at least two distinct values of lam")
    params = solver_params(config)
    norm = params.gradient_norm
    base = build_problem(config, lam=1.0)
    g = base.g
    tv_g = anisotropic_tv(g, base.phi, norm)
    threshold = config.analysis.threshold or default_threshold(g)
    directory = (
        Path(config.output.directory)
        / f"{_stamp()}_{config.output.run_name}_sweep"
    )
    directory.mkdir(parents=True)

    rows = []
    jump_counts = []
    solutions: dict[float, ScalarField] = {}
    for k, lam in enumerate(lambdas):
        phi = base.phi.scaled(lam)
        row = {"lam": lam, "rate_bound": lam * tv_g}
        try:
            u, report = minimize(phi, base.psi, params)
        except (SolverDivergedError, FidelityError, StepSizeError) as e:
            logger.error("Solve for lam=%g failed: %s", lam, e)
            rows.append({**row, "error": str(e)})
            continue
        if report.converged:
            solutions[lam] = u
        energy = total_energy(u, phi, base.psi, norm)
        jumps = detect_jumps(u, threshold, source=f"u_{k}")
        jumps.to_csv(directory / f"jumps_{k:02d}.csv")
        write_field_artifacts(directory, f"u_{k:02d}", u, config)
        jump_counts.append(len(jumps))
        distance = float(
            np.sum((u.values - g.values) ** 2) * g.grid.cell_measure
        )
        rows.append(
            {
                **row,
                "energy": energy.total,
                "tv": energy.tv_term,
                "fidelity": energy.fidelity_term,
                "half_sq_distance": 0.5 * distance,
                "jump_count": len(jumps),
                "max_jump": jumps.max_height,
                "converged": report.converged,
                "rate_ok": energy.fidelity_term
                <= lam * tv_g + max(report.gap, 0.0) + 1e-12,
            }
        )

    pairs = []
    quadratic = config.problem.fidelity == "quadratic"
    if config.problem.model != "elliptic" and quadratic:
        for lam, mu in zip(lambdas, lambdas[1:]):
            if lam not in solutions or mu not in solutions:
                # the inclusion is only meaningful between certified solves
                pairs.append(
                    {
                        "lam": lam,
                        "mu": mu,
                        "error": "a solve did not converge",
                    }
                )
                continue
            check = epsilon_jump_inclusion_check(
                g,
                lam,
                mu,
                config.analysis.epsilon,
                threshold,
                config.analysis.radius,
                params,
                weight=base.weight,
                minimizers=(solutions[lam], solutions[mu]),
            )
            pairs.append(json.loads(check.model_dump_json()))
    columns = [
        "lam",
        "energy",
        "tv",
        "fidelity",
        "half_sq_distance",
        "rate_bound",
        "jump_count",
        "max_jump",
        "converged",
    ]
    write_table_csv(
        directory / "summary.csv",
        {c: [float(r.get(c, math.nan)) for r in rows] for c in columns},
    )
    summary = {
        "rows": rows,
        "pairwise_epsilon_inclusion": pairs,
        "jump_counts_monotone": all(
            a <= b for a, b in zip(jump_counts, jump_counts[1:])
        ),
    }
    (directory / "sweep.json").write_text(json.dumps(summary, indent=2))
    logger.info("Sweep over %d values written to %s", len(lambdas), directory)
    ok = all(r.get("converged", False) for r in rows)
    return EXIT_OK if ok else EXIT_NOT_CONVERGED


def cmd_reproduce(config: ExperimentConfig, figure: str) -> int:
    """Regenerate a figure preset into its own timestamped directory.

    Returns:
        int: 0 if the solve converged and every asserted check passed, 2 if
            the solve stopped at max_iters, 3 if a check failed.

    Raises:
        UnknownFigureError: If no preset has that name.
    """
    directory = Path(config.output.directory) / f"{_stamp()}_{figure}"
    report = reproduce(config, figure, directory)
    for name, passed in report.checks.items():
        print(f"{name:<40} {'PASS' if passed else 'FAIL'}")
    if report.exploratory:
        print(f"{figure} is exploratory; observations in figure.json")
    if not report.converged:
        return EXIT_NOT_CONVERGED
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED
