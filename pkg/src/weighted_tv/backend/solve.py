from __future__ import annotations

import logging
import time
from typing import Callable

import numpy as np
from pydantic import BaseModel, Field

from .energy import check_dual_feasible, total_energy
from .fidelity import FidelityTerm
from .grid import ScalarField, VectorField, divergence, forward_gradient
from .integrands import FinslerIntegrand, GradientNorm
from .solver_1d import dual_certificate_1d, solve_1d_exact
from .solver_params import SolverParams
from .weights import WeightPreset

logger = logging.getLogger(__name__)


class SolverDivergedError(ValueError):
    """Raised when an iterate stops being finite."""

    def __init__(self, iteration: int):
        self.iteration = iteration
        super().__init__(f"Non-finite iterate at iteration {iteration}")


class NotConvergedError(RuntimeError):
    """Raised by callers that need a converged solve and did not get one."""


class Checkpoint(BaseModel):
    iteration: int
    primal: float
    dual: float
    gap: float


class SolverReport(BaseModel):
    """Outcome of a solve. Energies are in the units of
    :func:`~weighted_tv.backend.energy.total_energy`; the gap is the best
    primal value seen minus the best dual value seen.
    """

    iterations: int
    primal_energy: float
    dual_energy: float
    gap: float
    converged: bool
    gap_tol: float = 1e-8
    wall_time: float = 0.0
    method: str = "primal-dual"
    checkpoints: list[Checkpoint] = []
    dual: VectorField | None = Field(
        None, exclude=True, description="The dual field behind dual_energy."
    )

    @property
    def relative_gap(self) -> float:
        return self.gap / (1.0 + abs(self.primal_energy))


def dual_objective(z: np.ndarray, psi: FidelityTerm) -> float:
    """Fenchel dual value -Σ Ψ*(x, -div z) times the cell measure. For the
    quadratic fidelity this is Σ (g div z - ½ (div z)²).
    """
    grid = psi.grid
    s = divergence(z, grid)
    return float(-np.sum(psi.conjugate(-s)) * grid.cell_measure)


def project_dual(
    z: VectorField,
    phi: FinslerIntegrand,
    norm: GradientNorm = "euclidean",
) -> VectorField:
    """Pointwise projection onto {q : Φ⁰(x, q) <= 1}."""
    z.grid.check_same(phi.grid)
    return VectorField(grid=z.grid, values=phi.project(z.values, norm))


def certify(
    u: ScalarField,
    z: VectorField,
    phi: FinslerIntegrand,
    psi: FidelityTerm,
    norm: GradientNorm = "euclidean",
    gap_tol: float = 1e-8,
) -> SolverReport:
    """Primal energy of u, dual value of z and their gap.

    Raises:
        InfeasibleDualError: If z violates the polar constraint.
    """
    check_dual_feasible(z, phi, norm)
    primal = total_energy(u, phi, psi, norm).total
    dual = dual_objective(z.values, psi)
    gap = primal - dual
    return SolverReport(
        iterations=0,
        primal_energy=primal,
        dual_energy=dual,
        gap=gap,
        converged=gap <= gap_tol * (1.0 + abs(primal)),
        gap_tol=gap_tol,
        method="certificate",
        dual=z,
    )


def solve_pd(
    phi: FinslerIntegrand,
    psi: FidelityTerm,
    params: SolverParams | None = None,
    init: ScalarField | None = None,
    on_checkpoint: Callable[[Checkpoint], None] | None = None,
) -> tuple[ScalarField, SolverReport]:
    """Minimize TV_Φ(u) + ∫Ψ(x, u) with the primal-dual hybrid gradient
    method.

    The dual iterate z lives on the gradient edges and is kept feasible by
    projection, so every gap evaluation is a certificate. Gaps are evaluated
    at iteration 1 and every ``params.check_every`` iterations; the returned
    u is the best certified primal candidate.

    Args:
        phi (FinslerIntegrand): The anisotropy.
        psi (FidelityTerm): The fidelity; its datum fixes the grid.
        params (SolverParams, optional): Solver parameters. Defaults to
            SolverParams().
        init (ScalarField, optional): Starting primal iterate. Defaults to
            the datum g.
        on_checkpoint (Callable, optional): Called with every recorded
            Checkpoint, e.g. to report progress. Defaults to None.

    Raises:
        StepSizeError: If the step sizes violate tau * sigma * L**2 <= 1.
        SolverDivergedError: If an iterate becomes non-finite.

    Returns:
        tuple[ScalarField, SolverReport]: The minimizer estimate and a report
            whose ``dual`` holds the matching dual field.
    """
    params = params if params is not None else SolverParams()
    grid = psi.grid
    grid.check_same(phi.grid)
    norm = params.gradient_norm
    phi.project(np.zeros((grid.ndim, *grid.shape)), norm)  # validates norm
    tau, sigma = params.step_sizes(grid)
    gamma = psi.strong_convexity if params.accelerate else 0.0

    if init is None:
        u = psi.g.values.copy()
    else:
        grid.check_same(init.grid)
        u = init.values.copy()
    u_bar = u.copy()
    z = np.zeros((grid.ndim, *grid.shape))
    clip_range = None
    if phi.kind != "elliptic":
        clip_range = (float(psi.g.values.min()), float(psi.g.values.max()))

    best_primal, best_dual = np.inf, -np.inf
    best_u, best_z = u.copy(), z.copy()
    checkpoints: list[Checkpoint] = []
    converged = False
    start_time = time.time()
    iteration = 0
    for iteration in range(1, params.max_iters + 1):
        z = phi.project(z - sigma * forward_gradient(u_bar, grid), norm)
        u_old = u
        u = psi.prox(u - tau * divergence(z, grid), tau)
        if not np.isfinite(np.sum(u)):
            raise SolverDivergedError(iteration)
        if gamma > 0:
            theta = 1.0 / np.sqrt(1.0 + 2.0 * gamma * tau)
            tau, sigma = theta * tau, sigma / theta
        else:
            theta = params.theta
        u_bar = u + theta * (u - u_old)

        log_now = iteration % params.log_every == 0
        if not (
            iteration == 1 or log_now or iteration % params.check_every == 0
        ):
            continue
        candidate = u if clip_range is None else np.clip(u, *clip_range)
        primal = _primal(candidate, phi, psi, norm)
        dual = dual_objective(z, psi)
        if primal < best_primal:
            best_primal, best_u = primal, candidate.copy()
        if dual > best_dual:
            best_dual, best_z = dual, z.copy()
        gap = best_primal - best_dual
        if log_now:
            checkpoint = Checkpoint(
                iteration=iteration,
                primal=best_primal,
                dual=best_dual,
                gap=gap,
            )
            checkpoints.append(checkpoint)
            logger.debug(
                "Iteration %d: primal %.10g dual %.10g gap %.3e",
                iteration,
                best_primal,
                best_dual,
                gap,
            )
            if on_checkpoint is not None:
                on_checkpoint(checkpoint)
        if gap <= params.gap_tol * (1.0 + abs(best_primal)):
            converged = True
            break

    gap = best_primal - best_dual
    wall_time = time.time() - start_time
    if converged:
        logger.info(
            "Solve converged after %d iterations (gap %.3e) in %.2f seconds",
            iteration,
            gap,
            wall_time,
        )
    else:
        logger.warning(
            "Solve stopped after %d iterations with gap %.3e (tol %.1e)",
            iteration,
            gap,
            params.gap_tol,
        )
    if not checkpoints or checkpoints[-1].iteration != iteration:
        checkpoints.append(
            Checkpoint(
                iteration=iteration,
                primal=best_primal,
                dual=best_dual,
                gap=gap,
            )
        )
    report = SolverReport(
        iterations=iteration,
        primal_energy=best_primal,
        dual_energy=best_dual,
        gap=gap,
        converged=converged,
        gap_tol=params.gap_tol,
        wall_time=wall_time,
        checkpoints=checkpoints,
        dual=VectorField(grid=grid, values=best_z * grid.edge_mask()),
    )
    return psi.g.with_values(best_u), report


def _primal(
    values: np.ndarray,
    phi: FinslerIntegrand,
    psi: FidelityTerm,
    norm: GradientNorm,
) -> float:
    u = psi.g.with_values(values)
    return total_energy(u, phi, psi, norm).total


def minimize(
    phi: FinslerIntegrand,
    psi: FidelityTerm,
    params: SolverParams | None = None,
    on_checkpoint: Callable[[Checkpoint], None] | None = None,
) -> tuple[ScalarField, SolverReport]:
    """Minimize with the exact 1D solver where it applies (1D grid, neumann
    boundaries, isotropic or weighted Φ), and with :func:`solve_pd`
    otherwise. The exact path is certified with its matching dual field.
    """
    params = params if params is not None else SolverParams()
    grid = psi.grid
    if grid.ndim != 1 or grid.boundary != "neumann":
        return solve_pd(phi, psi, params, on_checkpoint=on_checkpoint)
    start_time = time.time()
    u = solve_1d_exact(psi.g, phi, psi)
    z = VectorField(
        grid=grid,
        values=phi.project(dual_certificate_1d(u, psi), "manhattan"),
    )
    report = certify(u, z, phi, psi, "manhattan", params.gap_tol)
    report = report.model_copy(
        update={
            "iterations": 1,
            "method": "exact-1d",
            "wall_time": time.time() - start_time,
            "checkpoints": [
                Checkpoint(
                    iteration=1,
                    primal=report.primal_energy,
                    dual=report.dual_energy,
                    gap=report.gap,
                )
            ],
        }
    )
    logger.info(
        "Exact 1D solve of %d samples (gap %.3e)", grid.size, report.gap
    )
    return u, report


def solve_rof(
    g: ScalarField,
    weight: float | str | WeightPreset | ScalarField = 1.0,
    params: SolverParams | None = None,
    scale: float = 1.0,
    require_converged: bool = False,
) -> tuple[ScalarField, SolverReport]:
    """Minimize scale * ∫w|Du| + ½‖u - g‖² with :func:`minimize`.

    Raises:
        NotConvergedError: If ``require_converged`` and the solve stops at
            max_iters.
    """
    phi = FinslerIntegrand.weighted(g.grid, weight)
    if scale != 1.0:
        phi = phi.scaled(scale)
    u, report = minimize(phi, FidelityTerm.quadratic(g), params)
    if require_converged and not report.converged:
        raise NotConvergedError(
            f"Solve stopped after {report.iterations} iterations with "
            f"relative gap {report.relative_gap:.3e}"
        )
    return u, report
