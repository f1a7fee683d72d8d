"""Nonlinear solvers for the discrete Monge-Ampere problems.

``march`` is the Laplacian-preconditioned fixed-point ("time marching")
iteration

    -nu Delta_h u^{k+1} = -nu Delta_h u^k + N_h(u^k) - f   inside,
    u^{k+1} = g                                             on the ring,

implemented as ``u^{k+1} = u^k + z/nu`` with ``-Delta_h z = N_h(u^k) - f`` and
``z = 0`` on the ring.  One sparse factorization of ``-Delta_h`` serves every
iteration.  ``newton_central`` runs Newton's method on the central scheme.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import fd_ops as fd
from .grid import GridIndexSets, set_boundary
from .ma_ops import CENTRAL, COMPATIBLE_SYM, convexity_report, residual, scheme_kind
from .poisson import PoissonSystem, assemble

log = logging.getLogger(__name__)

CONVERGED_INCREMENT = "converged-increment"
CONVERGED_RESIDUAL = "converged-residual"
MAX_ITERS = "max-iters"
DIVERGED = "diverged"

DIVERGENCE_THRESHOLD = 1e6


@dataclass
class MarchConfig:
    nu: float
    kind: str = COMPATIBLE_SYM
    max_iters: int = 50000
    tol_increment: float = 1e-8
    tol_residual: float = 1e-8
    # diagnostics (eigenvalues, min Laplacian) are recorded every this many steps
    monitor_every: int = 1

    def __post_init__(self):
        self.kind = scheme_kind(self.kind)
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if not (self.tol_increment > 0 and self.tol_residual > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1 or self.monitor_every < 1:
            raise ValueError("max_iters and monitor_every must be >= 1")


@dataclass
class SolveReport:
    method: str
    increments: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    min_eig: list = field(default_factory=list)
    """(iteration, min lambda_1(sym H(u^k))) pairs."""
    min_laplacian: list = field(default_factory=list)
    """(iteration, min Delta_h u^k over interior nodes) pairs."""
    times: list = field(default_factory=list)
    termination: str = MAX_ITERS
    phases: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.increments)

    @property
    def seconds(self) -> float:
        return self.times[-1] if self.times else 0.0

    @property
    def converged(self) -> bool:
        return self.termination in (CONVERGED_INCREMENT, CONVERGED_RESIDUAL)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["iterations"] = self.iterations
        out["seconds"] = self.seconds
        return out


def _monitor(report: SolveReport, k: int, u: np.ndarray, sets: GridIndexSets):
    conv = convexity_report(u, sets)
    report.min_eig.append((k, conv.min_eig_ns))
    lap = fd.interior_values(fd.laplacian(u, sets.grid.h), sets)
    report.min_laplacian.append((k, float(lap.min())))


def initial_guess(f: np.ndarray, g: np.ndarray, system: PoissonSystem) -> np.ndarray:
    """Solve ``Delta_h w = d f^(1/d)`` (``2 sqrt f`` in 2D) with ``w = g`` on the ring."""
    sets = system.sets
    d = sets.grid.d
    fi = np.asarray(f, dtype=float)[sets.interior_mask]
    if np.any(fi < 0):
        raise ValueError("f must be nonnegative at interior nodes")
    rhs = np.zeros(sets.grid.shape)
    rhs[sets.interior_mask] = -d * fi ** (1.0 / d)
    return system.solve(rhs, bc=g)


def march_step(u: np.ndarray, f: np.ndarray, nu: float, kind: str,
               system: PoissonSystem) -> tuple[np.ndarray, np.ndarray]:
    """One iteration; returns ``(u_next, residual(u))``."""
    r = residual(u, f, system.sets, kind)
    z = system.solve(r) / nu
    return u + z, r


def march(u0: np.ndarray, f: np.ndarray, g: np.ndarray, cfg: MarchConfig,
          system: PoissonSystem, report: Optional[SolveReport] = None):
    """Run the time-marching iteration from ``u0``.

    Never raises on non-convergence: the report's ``termination`` says how the
    loop ended.  Boundary values are those of ``g`` at every iterate.
    """
    sets = system.sets
    report = report if report is not None else SolveReport(method=f"march:{cfg.kind}")
    report.phases.append({"method": "march", "kind": cfg.kind, "nu": cfg.nu,
                          "start": report.iterations})
    u = set_boundary(u0, g, sets)
    t0 = time.perf_counter() - report.seconds
    start = report.iterations
    report.termination = MAX_ITERS
    for k in range(cfg.max_iters):
        it = start + k
        if k % cfg.monitor_every == 0:
            _monitor(report, it, u, sets)
        try:
            u_next, r = march_step(u, f, cfg.nu, cfg.kind, system)
        except (fd.StencilError, RuntimeError, FloatingPointError) as exc:
            log.warning("march stopped at iteration %d: %s", it, exc)
            report.termination = DIVERGED
            break
        inc = float(np.max(np.abs(u_next - u)))
        res = float(np.max(np.abs(r)))
        report.increments.append(inc)
        report.residuals.append(res)
        report.times.append(time.perf_counter() - t0)
        if not (np.isfinite(inc) and np.isfinite(res)) or inc > DIVERGENCE_THRESHOLD:
            report.termination = DIVERGED
            break
        u = u_next
        if inc <= cfg.tol_increment:
            report.termination = CONVERGED_INCREMENT
            break
        if res <= cfg.tol_residual:
            report.termination = CONVERGED_RESIDUAL
            break
    if report.termination != DIVERGED:
        _monitor(report, report.iterations, u, sets)
    log.info("march %s: %d iterations, %s", cfg.kind, report.iterations, report.termination)
    return u, report


# ---------------------------------------------------------------------------
# Newton's method for the central scheme


def _central_hessian_operators(sets: GridIndexSets):
    """Sparse matrices ``E[i][j]`` with ``(E_ij v)[interior] = Hbar(v)_ij``.

    Rows are interior nodes, columns all lattice nodes.
    """
    grid = sets.grid
    d, h, N = grid.d, grid.h, grid.n + 1
    one = np.ones(N)
    D2 = sp.diags([one[:-1], -2 * one, one[:-1]], [-1, 0, 1], format="csr") / h**2
    C1 = sp.diags([-one[:-1], one[:-1]], [-1, 1], format="csr") / (2 * h)
    I = sp.identity(N, format="csr")

    def kron_all(factors):
        out = factors[0]
        for fct in factors[1:]:
            out = sp.kron(out, fct, format="csr")
        return out

    rows = sets.interior
    E = [[None] * d for _ in range(d)]
    for i in range(d):
        E[i][i] = kron_all([D2 if k == i else I for k in range(d)])[rows]
        for j in range(i + 1, d):
            E[i][j] = kron_all([C1 if k in (i, j) else I for k in range(d)])[rows]
            E[j][i] = E[i][j]
    return E


@dataclass
class NewtonConfig:
    tol: float = 1e-10
    max_iters: int = 50
    damped: bool = False
    # stop once a step is at roundoff level relative to max|u|; on fine grids
    # the residual floor of det Hbar (~ eps |u| / h^2) can sit above tol
    tol_step: float = 1e-14


def newton_central(u0: np.ndarray, f: np.ndarray, g: np.ndarray, sets: GridIndexSets,
                   cfg: Optional[NewtonConfig] = None):
    """Newton's method on ``F(u) = det Hbar(u) - f`` with ``F'(u) v = cof(Hbar u) : Hbar v``.

    Each step solves the sparse linearized system directly, with zero
    increment on the ring.  A singular linearization or non-finite iterate
    ends the run with ``termination = "diverged"``.
    """
    cfg = cfg or NewtonConfig()
    report = SolveReport(method="newton:central")
    E = _central_hessian_operators(sets)
    d = sets.grid.d
    cols = sets.interior
    E_int = [[E[i][j][:, cols] for j in range(d)] for i in range(d)]
    u = set_boundary(u0, g, sets)
    t0 = time.perf_counter()
    report.termination = MAX_ITERS

    def resid_norm(v):
        return float(np.max(np.abs(residual(v, f, sets, CENTRAL))))

    for k in range(cfg.max_iters + 1):
        F = residual(u, f, sets, CENTRAL)
        res = float(np.max(np.abs(F)))
        _monitor(report, k, u, sets)
        if not np.isfinite(res):
            report.termination = DIVERGED
            break
        if res <= cfg.tol:
            report.termination = CONVERGED_RESIDUAL
            report.residuals.append(res)
            report.increments.append(0.0)
            report.times.append(time.perf_counter() - t0)
            break
        if k == cfg.max_iters:
            break
        cof = fd.interior_values(fd.mat_cof(fd.hessian_central(u, sets.grid.h)), sets)
        J = sp.csr_matrix((len(cols), len(cols)))
        for i in range(d):
            for j in range(d):
                J = J + sp.diags(cof[:, i, j]) @ E_int[i][j]
        b = -F[sets.interior_mask]
        try:
            step = spla.splu(J.tocsc()).solve(b)
        except RuntimeError as exc:
            log.warning("singular Newton linearization at iteration %d: %s", k, exc)
            report.termination = DIVERGED
            break
        if not np.all(np.isfinite(step)) or (
            np.linalg.norm(J @ step - b) > 1e-10 * max(np.linalg.norm(b), 1e-300)
        ):
            report.termination = DIVERGED
            break
        delta = np.zeros(sets.grid.shape)
        delta[sets.interior_mask] = step
        t = 1.0
        if cfg.damped:
            while t > 1e-4 and not resid_norm(u + t * delta) < res:
                t /= 2
        u = u + t * delta
        report.increments.append(float(np.max(np.abs(t * step))))
        report.residuals.append(res)
        report.times.append(time.perf_counter() - t0)
        if report.increments[-1] > DIVERGENCE_THRESHOLD:
            report.termination = DIVERGED
            break
        if report.increments[-1] <= cfg.tol_step * max(1.0, float(np.max(np.abs(u)))):
            report.termination = CONVERGED_INCREMENT
            break
    log.info("newton: %d iterations, %s", report.iterations, report.termination)
    return u, report


# ---------------------------------------------------------------------------
# rescaling and chained solves


def rescale_factor(u0: np.ndarray, sets: GridIndexSets, delta: float) -> float:
    """``beta`` with ``beta * (C0/2) * h^(1 + d/2) = delta``, where ``C0`` is the
    smallest eigenvalue of ``sym H(u0)`` over the interior."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    c0 = convexity_report(u0, sets).min_eig_ns
    if c0 <= 0:
        raise ValueError(f"initial guess is not discrete strictly convex (C0 = {c0:.3g})")
    h, d = sets.grid.h, sets.grid.d
    return delta / ((c0 / 2) * h ** (1 + d / 2))


def rescale_solve(f: np.ndarray, g: np.ndarray, system: PoissonSystem,
                  solve: Callable, delta: Optional[float] = None,
                  beta: Optional[float] = None):
    """Solve for ``beta u`` with data ``(beta^d f, beta g)`` and scale back.

    ``solve(f, g, system) -> (u, report)`` is the underlying solver.  Give
    either ``beta`` directly or ``delta`` to derive it from the initial guess.
    """
    sets = system.sets
    if beta is None:
        if delta is None:
            raise ValueError("give delta or beta")
        beta = rescale_factor(initial_guess(f, g, system), sets, delta)
    if not beta > 0:
        raise ValueError("beta must be positive")
    d = sets.grid.d
    U, report = solve(beta**d * np.asarray(f), beta * np.asarray(g), system)
    report.phases.append({"method": "rescale", "beta": beta})
    return U / beta, report


def chained_solve(f: np.ndarray, g: np.ndarray, system: PoissonSystem,
                  cfg_central: MarchConfig, cfg_compatible: MarchConfig,
                  u0: Optional[np.ndarray] = None):
    """Central-scheme marching from the Poisson initial guess, then the
    compatible iteration seeded with its result; one combined report."""
    if cfg_central.kind != CENTRAL:
        raise ValueError("first phase must use the central scheme")
    if u0 is None:
        u0 = initial_guess(f, g, system)
    report = SolveReport(method=f"chained:central+{cfg_compatible.kind}")
    u, report = march(u0, f, g, cfg_central, system, report)
    if report.termination == DIVERGED:
        return u, report
    return march(u, f, g, cfg_compatible, system, report)


def solve_problem(f, g, sets: GridIndexSets, cfg: MarchConfig):
    """Convenience: assemble, build the initial guess and march."""
    system = assemble(sets)
    return march(initial_guess(f, g, system), f, g, cfg, system)
