"""Test problems on the unit square and error measurement.

Each problem carries ``f``, ``g`` and, when known, the exact solution together
with its analytic Hessian (used to check ``det D^2 u = f`` independently of any
discretization).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .grid import Grid, GridIndexSets, build_index_sets, restrict


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    f: Callable[..., np.ndarray]
    g: Callable[..., np.ndarray]
    exact_u: Optional[Callable[..., np.ndarray]] = None
    exact_hessian: Optional[Callable[..., np.ndarray]] = field(default=None, repr=False)
    nu: float = 50.0
    scheme: str = "compatible-sym"
    notes: str = ""


def _exp_u(x, y):
    return np.exp((x * x + y * y) / 2)


def _exp_f(x, y):
    return (1 + x * x + y * y) * np.exp(x * x + y * y)


def _exp_hess(x, y):
    e = np.exp((x * x + y * y) / 2)
    return np.array([[(1 + x * x) * e, x * y * e], [x * y * e, (1 + y * y) * e]])


def _sphere_u(x, y):
    return -np.sqrt(np.maximum(2 - x * x - y * y, 0.0))


def _sphere_f(x, y):
    with np.errstate(divide="ignore"):
        return 2 / (2 - x * x - y * y) ** 2


def _sphere_hess(x, y):
    s = 2 - x * x - y * y
    r = s ** 1.5
    return np.array([[(2 - y * y) / r, x * y / r], [x * y / r, (2 - x * x) / r]])


def _abs_u(x, y):
    return np.abs(x - 0.5) + 0 * y


def _quad_u(x, y):
    return (x * x + y * y) / 2


def _one(x, y):
    return np.ones_like(x + y, dtype=float)


def _zero(x, y):
    return np.zeros_like(x + y, dtype=float)


_CATALOG = [
    ProblemSpec("smooth-exp", f=_exp_f, g=_exp_u, exact_u=_exp_u, exact_hessian=_exp_hess,
                nu=50.0, scheme="compatible-sym", notes="smooth"),
    ProblemSpec("sphere", f=_sphere_f, g=_sphere_u, exact_u=_sphere_u,
                exact_hessian=_sphere_hess, nu=150.0, scheme="compatible-sym",
                notes="not in H^2: Hessian blows up at the corner (1, 1)"),
    ProblemSpec("constant-rhs", f=_one, g=_zero, nu=50.0, scheme="compatible-sym",
                notes="no exact solution"),
    ProblemSpec("degenerate-abs", f=_zero, g=_abs_u, exact_u=_abs_u, nu=5.0,
                scheme="central", notes="degenerate, f = 0"),
    ProblemSpec("smooth-exp-central", f=_exp_f, g=_exp_u, exact_u=_exp_u,
                exact_hessian=_exp_hess, nu=4.0, scheme="central",
                notes="smooth; central scheme and Newton timings"),
]

# secondary entry, not part of the published set: exact for every scheme
_QUADRATIC = ProblemSpec("quadratic", f=_one, g=_quad_u, exact_u=_quad_u,
                         exact_hessian=lambda x, y: np.array([[1.0 + 0 * x, 0 * x],
                                                              [0 * x, 1.0 + 0 * x]]),
                         nu=5.0, scheme="compatible-sym", notes="manufactured, quadratic")

ALIASES = {
    "table1": "smooth-exp",
    "table2": "sphere",
    "table3": "smooth-exp-central",
    "figure1": "constant-rhs",
    "figure2": "degenerate-abs",
}


def catalog() -> list[ProblemSpec]:
    return list(_CATALOG)


def get_problem(name: str) -> ProblemSpec:
    name = ALIASES.get(name, name)
    for p in _CATALOG + [_QUADRATIC]:
        if p.name == name:
            return p
    known = sorted([p.name for p in _CATALOG] + [_QUADRATIC.name] + list(ALIASES))
    raise KeyError(f"unknown problem {name!r}; known: {', '.join(known)}")


def grid_data(problem: ProblemSpec, grid: Grid):
    """``(sets, f_h, g_h)`` for a problem on a grid.

    ``f`` is only meaningful at interior nodes; boundary entries where it is
    not finite (the corner of ``sphere``) are set to 0.
    """
    sets = build_index_sets(grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        fv = np.asarray(problem.f(*grid.coords), dtype=float) * np.ones(grid.shape)
    if not np.all(np.isfinite(fv[sets.interior_mask])):
        raise ValueError(f"f of {problem.name!r} is not finite at an interior node")
    fv = np.where(np.isfinite(fv), fv, 0.0)
    if np.any(fv[sets.interior_mask] < 0):
        raise ValueError(f"f of {problem.name!r} is negative at an interior node")
    return sets, fv, restrict(grid, problem.g)


def max_error(u_h: np.ndarray, exact_u: Callable[..., np.ndarray], sets: GridIndexSets) -> float:
    """Largest ``|u_h - u|`` over the interior nodes."""
    exact = restrict(sets.grid, exact_u)
    return float(np.max(np.abs(u_h - exact)[sets.interior_mask]))


@dataclass
class ConvergenceRow:
    h: float
    error: float
    order: Optional[float]
    iterations: int
    seconds: float


def observed_orders(errors) -> list[Optional[float]]:
    """``log2(e(h)/e(h/2))`` between consecutive rows; None when undefined."""
    out: list[Optional[float]] = [None]
    for a, b in zip(errors[:-1], errors[1:]):
        if a > 1e-10 and b > 1e-10:
            out.append(math.log2(a / b))
        else:
            out.append(None)
    return out


def convergence_table(problem: ProblemSpec, ns, solve: Callable, mode: str = "full"):
    """Run ``solve(problem, grid) -> (u_h, report)`` on each ``n`` and tabulate.

    Rows come out in decreasing ``h``.  ``report`` must expose ``iterations``.
    """
    if problem.exact_u is None:
        raise ValueError(f"{problem.name!r} has no exact solution")
    rows = []
    for n in sorted(ns):
        grid = Grid(2, n, mode)
        t0 = time.perf_counter()
        u_h, report = solve(problem, grid)
        seconds = time.perf_counter() - t0
        err = max_error(u_h, problem.exact_u, build_index_sets(grid))
        rows.append(ConvergenceRow(grid.h, err, None, report.iterations, seconds))
    for row, order in zip(rows, observed_orders([r.error for r in rows])):
        row.order = order
    return rows
