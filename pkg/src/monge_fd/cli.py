"""Command-line front end: ``monge-fd {solve,sweep,verify}``.

Every flag can also be given through an environment variable named
``MONGE_FD_<FLAG>`` (upper case, dashes as underscores), e.g.
``MONGE_FD_NU=150`` or ``MONGE_FD_N="8 16 32"``.  An explicit flag wins over
the environment.

Exit status: 0 on success, 2 on an invalid configuration, 3 when a solve
diverges (the report is still written), 1 when ``verify`` has a failing item.
Errors are printed to stdout as a JSON object ``{"error": {...}}``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from . import ma_ops as ma
from .grid import MODES, Grid, build_index_sets
from .poisson import assemble
from .problems import (ConvergenceRow, get_problem, grid_data, max_error, observed_orders)
from .solvers import (CENTRAL, DIVERGED, MarchConfig, NewtonConfig, chained_solve,
                      initial_guess, march, newton_central, rescale_solve)
from .verify import FAULTS, run_suite

ENV_PREFIX = "MONGE_FD_"
SOLVERS = ("march", "newton", "chained", "rescaled")

EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    problem: str = "smooth-exp"
    scheme: Optional[str] = None
    mode: str = "full"
    n: list = field(default_factory=lambda: [16])
    nu: Optional[float] = None
    solver: str = "march"
    tol_inc: float = 1e-8
    tol_res: float = 1e-8
    max_iters: int = 50000
    central_iters: int = 10000
    delta: Optional[float] = None
    monitor_every: int = 10
    out: str = "."
    seed: int = 0
    threads: Optional[int] = None
    inject_fault: list = field(default_factory=list)

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver must be one of {SOLVERS}")
        if self.scheme is not None:
            try:
                self.scheme = ma.scheme_kind(self.scheme)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        if not self.n or any(k < 4 for k in self.n):
            raise ConfigError("every n must be >= 4")
        if self.command == "solve" and len(self.n) != 1:
            raise ConfigError("solve takes a single --n")
        if self.nu is not None and not self.nu > 0:
            raise ConfigError("nu must be positive")
        if not (self.tol_inc > 0 and self.tol_res > 0):
            raise ConfigError("tolerances must be positive")
        if self.max_iters < 1 or self.central_iters < 1 or self.monitor_every < 1:
            raise ConfigError("iteration counts must be >= 1")
        if self.delta is not None and not self.delta > 0:
            raise ConfigError("delta must be positive")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("threads must be >= 1")
        for name in self.inject_fault:
            if name not in FAULTS:
                raise ConfigError(f"unknown fault {name!r}")
        if self.command != "verify":
            self._validate_problem()
        return self

    def _validate_problem(self):
        if not _is_table(self.problem):
            try:
                p = get_problem(self.problem)
            except KeyError as exc:
                raise ConfigError(exc.args[0]) from None
            self.problem = p.name
            if self.scheme is None:
                self.scheme = p.scheme
            if self.nu is None:
                self.nu = p.nu
        if self.scheme is None:
            self.scheme = ma.COMPATIBLE_SYM
        if self.nu is None:
            self.nu = 50.0
        if self.solver == "newton" and self.scheme != CENTRAL:
            raise ConfigError("the newton solver needs --scheme central")
        if self.solver == "chained" and self.scheme == CENTRAL:
            raise ConfigError("the chained solver needs a compatible --scheme")
        if self.solver == "rescaled" and self.delta is None:
            raise ConfigError("the rescaled solver needs --delta")


def _is_table(problem: str) -> bool:
    return problem.endswith(".npz")


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _flag(parser, name, env_key=None, **kw):
    key = env_key or name.lstrip("-").replace("-", "_").upper()
    env = os.environ.get(ENV_PREFIX + key)
    if env is not None:
        if kw.get("nargs") == "+":
            kw["default"] = [kw["type"](tok) for tok in env.split()]
        elif kw.get("action") == "append":
            kw["default"] = env.split(",")
        else:
            kw["default"] = kw.get("type", str)(env)
    parser.add_argument(name, **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="monge-fd", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    _flag(common, "--out", default=".", help="output directory")
    _flag(common, "--seed", type=int, default=0)
    _flag(common, "--threads", type=int, default=None, help="BLAS/LAPACK thread cap")
    _flag(common, "--log-level", default="WARNING")

    solving = argparse.ArgumentParser(add_help=False)
    _flag(solving, "--problem", default="smooth-exp",
          help="catalog name or alias, or an .npz file with arrays f, g (optional u)")
    _flag(solving, "--scheme", default=None, help=f"one of {ma.SCHEMES}")
    _flag(solving, "--mode", default="full", choices=MODES)
    _flag(solving, "--n", type=int, nargs="+", default=[16])
    _flag(solving, "--nu", type=float, default=None)
    _flag(solving, "--solver", default="march", choices=SOLVERS)
    _flag(solving, "--tol-inc", type=float, default=1e-8)
    _flag(solving, "--tol-res", type=float, default=1e-8)
    _flag(solving, "--max-iters", type=int, default=50000)
    _flag(solving, "--central-iters", type=int, default=10000,
          help="iterations of the central phase of the chained solver")
    _flag(solving, "--delta", type=float, default=None, help="rescaling target")
    _flag(solving, "--monitor-every", type=int, default=10)

    sub.add_parser("solve", parents=[common, solving], help="single solve")
    sub.add_parser("sweep", parents=[common, solving], help="convergence table over --n")
    p_verify = sub.add_parser("verify", parents=[common], help="identity and property suite")
    _flag(p_verify, "--inject-fault", action="append", default=[],
          help=f"test hook, one of {sorted(FAULTS)}")
    return parser


def parse_config(argv=None) -> tuple[RunConfig, str]:
    args = vars(build_parser().parse_args(argv))
    level = args.pop("log_level")
    fields = RunConfig.__dataclass_fields__
    cfg = RunConfig(**{k: v for k, v in args.items() if k in fields})
    return cfg, level


# ---------------------------------------------------------------------------
# commands


def _metadata(cfg: RunConfig) -> dict:
    return {"version": __version__, "config": asdict(cfg)}


def _write_json(path: Path, obj: dict):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n",
                    encoding="utf-8")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def _load_data(cfg: RunConfig, n: int):
    """``(sets, f, g, exact_u_values or None)`` on the grid of size ``n``."""
    grid = Grid(2, n, cfg.mode)
    if _is_table(cfg.problem):
        try:
            data = np.load(cfg.problem)
        except OSError as exc:
            raise ConfigError(f"cannot read {cfg.problem}: {exc}") from None
        f, g = np.asarray(data["f"], float), np.asarray(data["g"], float)
        grid = Grid(f.ndim, n, cfg.mode)
        if f.shape != grid.shape or g.shape != grid.shape:
            raise ConfigError(f"tabulated data must have shape {grid.shape}")
        exact = np.asarray(data["u"], float) if "u" in data else None
        return build_index_sets(grid), f, g, exact
    problem = get_problem(cfg.problem)
    sets, f, g = grid_data(problem, grid)
    exact = None
    if problem.exact_u is not None:
        exact = np.broadcast_to(problem.exact_u(*grid.coords), grid.shape).astype(float)
    return sets, f, g, exact


def run_solver(cfg: RunConfig, sets, f, g):
    system = assemble(sets)
    march_cfg = MarchConfig(nu=cfg.nu, kind=cfg.scheme, max_iters=cfg.max_iters,
                            tol_increment=cfg.tol_inc, tol_residual=cfg.tol_res,
                            monitor_every=cfg.monitor_every)
    if cfg.solver == "march":
        return march(initial_guess(f, g, system), f, g, march_cfg, system)
    if cfg.solver == "newton":
        ncfg = NewtonConfig(tol=cfg.tol_res, max_iters=min(cfg.max_iters, 50))
        return newton_central(initial_guess(f, g, system), f, g, sets, ncfg)
    if cfg.solver == "chained":
        central = MarchConfig(nu=cfg.nu, kind=CENTRAL, max_iters=cfg.central_iters,
                              tol_increment=cfg.tol_inc, tol_residual=cfg.tol_res,
                              monitor_every=cfg.monitor_every)
        return chained_solve(f, g, system, central, march_cfg)

    def inner(fb, gb, sysb):
        return march(initial_guess(fb, gb, sysb), fb, gb, march_cfg, sysb)

    return rescale_solve(f, g, system, inner, delta=cfg.delta)


def cmd_solve(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    sets, f, g, exact = _load_data(cfg, cfg.n[0])
    u, report = run_solver(cfg, sets, f, g)

    grid = sets.grid
    meta = _metadata(cfg)
    with open(out / "solution.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{i + 1}" for i in range(grid.d)] + ["value"])
        pts = grid.points()
        for p, val in zip(pts, u.ravel()):
            w.writerow([repr(float(c)) for c in p] + [repr(float(val))])

    body = dict(meta)
    body["report"] = report.to_dict()
    body["error"] = None
    finite = bool(np.all(np.isfinite(u)))
    if exact is not None and finite:
        body["error"] = float(np.max(np.abs(u - exact)[sets.interior_mask]))
    if finite and report.termination != DIVERGED:
        conv = ma.convexity_report(u, sets)
        r = ma.residual(u, f, sets, cfg.scheme)
        body["final_residual"] = float(np.max(np.abs(r)))
        body["discrete_convex"] = conv.convex
        body["min_eig_sym_hessian"] = conv.min_eig_ns
        body["min_eig_central_hessian"] = conv.min_eig_central
    _write_json(out / "report.json", body)
    if report.termination == DIVERGED:
        _error("diverged", f"{report.method} diverged after {report.iterations} iterations")
        return EXIT_DIVERGED
    return 0


def cmd_sweep(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rows: list[ConvergenceRow] = []
    status = 0
    for n in sorted(cfg.n):
        sets, f, g, exact = _load_data(cfg, n)
        if exact is None:
            raise ConfigError("sweep needs a problem with an exact solution")
        u, report = run_solver(cfg, sets, f, g)
        err = max_error(u, lambda *_: exact, sets) if np.all(np.isfinite(u)) else float("nan")
        if report.termination == DIVERGED:
            status = EXIT_DIVERGED
        rows.append(ConvergenceRow(sets.grid.h, err, None, report.iterations, report.seconds))
    for row, order in zip(rows, observed_orders([r.error for r in rows])):
        row.order = order
    with open(out / "table.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# " + json.dumps(_metadata(cfg), sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["h", "error", "order", "iters", "seconds"])
        for r in rows:
            order = "n/a" if r.order is None else f"{r.order:.4f}"
            w.writerow([repr(r.h), f"{r.error:.6e}", order, r.iterations, f"{r.seconds:.3f}"])
    if status:
        _error("diverged", "at least one solve in the sweep diverged")
    return status


def cmd_verify(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    results = run_suite(cfg.seed, faults=cfg.inject_fault)
    body = _metadata(cfg)
    body["checks"] = [r.to_dict() for r in results]
    body["passed"] = all(r.passed for r in results)
    _write_json(out / "verify.json", body)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.value:.4g} (threshold {r.threshold:g})")
    return 0 if body["passed"] else EXIT_FAILED


def _error(kind: str, message: str):
    print(json.dumps({"error": {"type": kind, "message": message}}))


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "verify": cmd_verify}


def main(argv=None) -> int:
    try:
        cfg, level = parse_config(argv)
        logging.basicConfig(level=level.upper())
        cfg.validate()
    except (ConfigError, ValueError) as exc:
        _error("invalid-config", str(exc))
        return EXIT_CONFIG
    try:
        with threadpool_limits(limits=cfg.threads):
            return COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        _error("invalid-config", str(exc))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
