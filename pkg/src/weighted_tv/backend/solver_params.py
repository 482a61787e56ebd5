from __future__ import annotations

import logging
from pathlib import Path

import yaml
from pydantic import BaseModel, Field

from .grid import Grid
from .integrands import GradientNorm

logger = logging.getLogger(__name__)


class StepSizeError(ValueError):
    """Raised when tau * sigma * L**2 exceeds 1."""


class SolverParams(BaseModel):
    """The set of primal-dual solver parameters. Used to configure solves
    from the command line and config files, as well as to store parameters
    for runs.
    """

    tau: float | None = Field(
        None,
        title="Primal Step",
        description=r"""Primal step size. If unset, 1/L where L bounds the norm of the
discrete gradient.""",
        gt=0,
        allow_inf_nan=False,
    )
    sigma: float | None = Field(
        None,
        title="Dual Step",
        description="Dual step size. If unset, 1/L (or 1/(tau L^2) when tau is set).",
        gt=0,
        allow_inf_nan=False,
    )
    theta: float = Field(
        1.0,
        title="Overrelaxation",
        description="Extrapolation weight of the primal iterate, in [0, 1].",
        ge=0,
        le=1,
    )
    max_iters: int = Field(
        20000,
        title="Max Iterations",
        description="The solve stops unconverged after this many iterations.",
        gt=0,
    )
    gap_tol: float = Field(
        1e-8,
        title="Gap Tolerance",
        description=r"""Relative duality gap at which the solve stops:
gap <= gap_tol * (1 + |primal energy|).""",
        gt=0,
    )
    gradient_norm: GradientNorm = Field(
        "euclidean",
        title="Gradient Norm",
        description=r"""Per-pixel Euclidean gradient norm, or the per-edge (manhattan)
discretization that min-cut solves exactly.""",
    )
    accelerate: bool = Field(
        True,
        title="Accelerate",
        description=r"""Adapt the step sizes to the strong convexity of the fidelity.
Ignored for fidelities that are not strongly convex.""",
    )
    check_every: int = Field(
        10,
        title="Gap Check Period",
        description="Iterations between duality gap evaluations.",
        gt=0,
    )
    log_every: int = Field(
        100,
        title="Checkpoint Period",
        description="Iterations between recorded checkpoints.",
        gt=0,
    )

    def step_sizes(self, grid: Grid) -> tuple[float, float]:
        """Resolve (tau, sigma) for a grid.

        Raises:
            StepSizeError: If tau * sigma * L**2 > 1 with L the analytic
                gradient norm bound of the grid.
        """
        lipschitz = grid.lipschitz_bound
        tau, sigma = self.tau, self.sigma
        if tau is None and sigma is None:
            tau = sigma = 1.0 / lipschitz
        elif tau is None:
            tau = 1.0 / (sigma * lipschitz**2)
        elif sigma is None:
            sigma = 1.0 / (tau * lipschitz**2)
        product = tau * sigma * lipschitz**2
        if product > 1.0 + 1e-12:
            raise StepSizeError(
                f"tau * sigma * L^2 = {product:.6g} > 1 (L = {lipschitz:.6g})"
            )
        return tau, sigma

    @classmethod
    def from_file(cls, path: str | Path) -> SolverParams:
        """Read parameters from a YAML (or plain ``key: value``) file.

        Raises:
            FileNotFoundError: If the file does not exist.
        """
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"Solver parameters not found at {path}")
        with open(path) as f:
            params = yaml.safe_load(f) or {}
        logger.debug("Loaded solver params %s from %s", params, path)
        return cls(**params)
