from .fidelity import FidelityTerm
from .grid import Grid, ScalarField, VectorField
from .integrands import FinslerIntegrand
from .solve import SolverReport, minimize, solve_pd, solve_rof
from .solver_params import SolverParams

__all__ = (
    "FidelityTerm",
    "FinslerIntegrand",
    "Grid",
    "ScalarField",
    "SolverParams",
    "SolverReport",
    "VectorField",
    "minimize",
    "solve_pd",
    "solve_rof",
)
