"""Finite-difference solvers for the Dirichlet Monge-Ampere problem
``det D^2 u = f`` on the unit box in two and three dimensions."""

from .grid import FULL, INTERIOR, Grid, GridIndexSets, build_index_sets, restrict, set_boundary
from .ma_ops import (CENTRAL, COMPATIBLE_HAT, COMPATIBLE_SYM, COMPATIBLE_TRANSPOSE, SCHEMES,
                     apply_scheme, convexity_report, residual)
from .poisson import PoissonSystem, assemble
from .problems import ProblemSpec, catalog, convergence_table, get_problem, grid_data, max_error
from .solvers import (MarchConfig, NewtonConfig, SolveReport, chained_solve, initial_guess, march,
                      newton_central, rescale_solve)

__version__ = "0.1.0"

__all__ = [
    "FULL", "INTERIOR", "Grid", "GridIndexSets", "build_index_sets", "restrict", "set_boundary",
    "CENTRAL", "COMPATIBLE_HAT", "COMPATIBLE_SYM", "COMPATIBLE_TRANSPOSE", "SCHEMES",
    "apply_scheme", "convexity_report", "residual", "PoissonSystem", "assemble",
    "ProblemSpec", "catalog", "convergence_table", "get_problem", "grid_data", "max_error",
    "MarchConfig", "NewtonConfig", "SolveReport", "chained_solve", "initial_guess", "march",
    "newton_central", "rescale_solve", "__version__",
]
