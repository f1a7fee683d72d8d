"""Self-checking suite of discrete identities, inequalities and consistency orders.

Each check returns a :class:`CheckResult` with the measured value next to the
threshold it is compared against.  ``run_suite`` drives all of them; the
``verify`` CLI command writes the results to ``verify.json``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from . import fd_ops as fd
from . import ma_ops as ma
from .grid import Grid, build_index_sets, restrict
from .poisson import assemble, poincare_constant
from .problems import get_problem

IDENTITY_TOL = 1e-11


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def to_dict(self):
        d = asdict(self)
        d["passed"] = bool(d["passed"])
        return d


def _rel(err, scale):
    return float(err / max(scale, 1e-300))


def _vanishing_field(rng, sets):
    v = rng.standard_normal(sets.grid.shape)
    v[sets.boundary_mask] = 0.0
    return v


def _flipped_backward(v, i, h):
    return -fd.diff_backward(v, i, h)


FAULTS: dict[str, dict[str, Callable]] = {
    "flip-backward-sign": {"backward": _flipped_backward},
}


# ---------------------------------------------------------------------------
# bit-level identities


def check_integration_by_parts(rng, n=8, trials=20, ops=None):
    ops = ops or {}
    backward = ops.get("backward", fd.diff_backward)
    worst = 0.0
    for mode in ("full", "interior"):
        sets = build_index_sets(Grid(2, n, mode))
        h = sets.grid.h
        for _ in range(trials):
            v, w = _vanishing_field(rng, sets), _vanishing_field(rng, sets)
            for i in range(2):
                lhs = fd.inner_l2(fd.diff_forward(v, i, h), w, sets)
                rhs = -fd.inner_l2(v, backward(w, i, h), sets)
                worst = max(worst, _rel(abs(lhs - rhs), abs(lhs) + abs(rhs)))
    return CheckResult("integration-by-parts", worst <= IDENTITY_TOL, worst, IDENTITY_TOL,
                       "<d+ v, w> = -<v, d- w> for v, w vanishing on the ring")


def check_energy_identity(rng, n=8, trials=20):
    worst = 0.0
    for mode in ("full", "interior"):
        sets = build_index_sets(Grid(2, n, mode))
        h = sets.grid.h
        for _ in range(trials):
            v = _vanishing_field(rng, sets)
            lhs = -fd.inner_l2(fd.div_field(fd.grad_forward(v, h), h), v, sets)
            rhs = fd.h1_seminorm(v, sets) ** 2
            worst = max(worst, _rel(abs(lhs - rhs), abs(rhs)))
    return CheckResult("energy-identity", worst <= IDENTITY_TOL, worst, IDENTITY_TOL,
                       "-<div_h D_h v, v> = |v|_{1,h}^2")


def check_leibniz(rng, n=8, trials=20):
    h = 1.0 / n
    worst = 0.0
    for _ in range(trials):
        v, w = rng.standard_normal((2, n + 1, n + 1))
        for i in range(2):
            lhs = fd.diff_backward(v * w, i, h)
            rhs = v * fd.diff_backward(w, i, h) + fd.shift(w, i, -1) * fd.diff_backward(v, i, h)
            scale = np.nanmax(np.abs(v * fd.diff_backward(w, i, h))) + np.nanmax(np.abs(lhs))
            worst = max(worst, _rel(np.nanmax(np.abs(lhs - rhs)), scale))
    return CheckResult("leibniz", worst <= IDENTITY_TOL, worst, IDENTITY_TOL,
                       "d-(vw) = v d-w + w(x - h e_i) d-v")


def check_product_rule(rng, n=8, trials=20):
    h = 1.0 / n
    worst = 0.0
    for _ in range(trials):
        A = rng.standard_normal((n + 1, n + 1, 2, 2))
        w = rng.standard_normal((n + 1, n + 1, 2))
        lhs = fd.div_field(np.einsum("...ij,...j->...i", A, w), h)
        rhs = (fd.frobenius(fd.grad_backward_mat(A, h), fd.translation_matrix(w))
               + fd.frobenius(A, np.swapaxes(fd.grad_backward_vec(w, h), -1, -2)))
        worst = max(worst, _rel(np.nanmax(np.abs(lhs - rhs)), np.nanmax(np.abs(lhs))))
    return CheckResult("product-rule", worst <= IDENTITY_TOL, worst, IDENTITY_TOL,
                       "div_h(A w) = (Dbar A):(tau w) + A:(Dbar w)^T")


def check_divfree_cof_hat(rng, n=8, trials=20):
    h = 1.0 / n
    worst = 0.0
    for _ in range(trials):
        v = rng.standard_normal((n + 1, n + 1))
        K = fd.mat_cof(fd.hessian_hat(v, h))
        div = fd.div_rows(K, h)
        scale = np.nanmax(np.abs(K)) / h
        worst = max(worst, _rel(np.nanmax(np.abs(div)), scale))
    return CheckResult("divergence-free-cof-hat", worst <= IDENTITY_TOL, worst, IDENTITY_TOL,
                       "rows of cof Hhat(v) have zero discrete divergence (2D)")


def check_cof_sym_commute(rng, n=8, trials=20):
    h = 1.0 / n
    worst = 0.0
    for _ in range(trials):
        H = fd.hessian_ns(rng.standard_normal((n + 1, n + 1)), h)
        a = fd.mat_cof(fd.mat_sym(H))
        b = fd.mat_sym(fd.mat_cof(H))
        worst = max(worst, _rel(np.nanmax(np.abs(a - b)), np.nanmax(np.abs(a))))
    return CheckResult("cof-sym-commute-2d", worst <= IDENTITY_TOL, worst, IDENTITY_TOL,
                       "cof sym H_2 v = sym cof H_2 v")


def check_cofactor_trace(rng, trials=200):
    worst = 0.0
    for d in (2, 3):
        A = rng.standard_normal((trials, d, d))
        lhs = fd.frobenius(fd.mat_cof(A), A)
        rhs = d * fd.mat_det(A)
        scale = np.abs(A).max(axis=(1, 2)) ** d
        worst = max(worst, float(np.max(np.abs(lhs - rhs) / scale)))
    return CheckResult("cofactor-trace", worst <= IDENTITY_TOL, worst, IDENTITY_TOL,
                       "cof(A):A = d det A, d in {2, 3}")


def check_homogeneity(rng, n=8, trials=5):
    worst = 0.0
    for kind in ma.SCHEMES:
        for mode in ("full", "interior"):
            sets = build_index_sets(Grid(2, n, mode))
            for _ in range(trials):
                u = rng.standard_normal(sets.grid.shape)
                f = rng.random(sets.grid.shape)
                beta = float(rng.uniform(0.5, 3.0))
                r1 = ma.residual(u, f, sets, kind)
                rb = ma.residual(beta * u, beta**2 * f, sets, kind)
                worst = max(worst, _rel(np.max(np.abs(rb - beta**2 * r1)),
                                        np.max(np.abs(beta**2 * r1))))
    return CheckResult("homogeneity", worst <= IDENTITY_TOL, worst, IDENTITY_TOL,
                       "residual(beta u, beta^d f) = beta^d residual(u, f), all schemes")


# ---------------------------------------------------------------------------
# inequalities on random samples


def _random_sym(rng, count, d):
    M = rng.standard_normal((count, d, d))
    return fd.mat_sym(M)


def check_eig_continuity(rng, count=1000):
    worst = -np.inf
    for d in (2, 3):
        A, B = _random_sym(rng, count, d), _random_sym(rng, count, d)
        la, La = fd.eig_minmax_sym(A)
        lb, Lb = fd.eig_minmax_sym(B)
        bound = d * np.abs(A - B).max(axis=(1, 2))
        slack = np.maximum(np.abs(la - lb), np.abs(La - Lb)) - bound
        worst = max(worst, float(slack.max()))
    return CheckResult("eigenvalue-continuity", worst <= 1e-12, worst, 1e-12,
                       "max over samples of |lambda_k(A)-lambda_k(B)| - d max|A-B|")


def check_cofactor_spectrum(rng, count=1000):
    worst = -np.inf
    for d in (2, 3):
        Q, _ = np.linalg.qr(rng.standard_normal((count, d, d)))
        lam = rng.uniform(0.1, 10.0, (count, d))
        A = fd.mat_sym(np.einsum("nij,nj,nkj->nik", Q, lam, Q))
        r, R = fd.eig_minmax_sym(A)
        c1, cd = fd.eig_minmax_sym(fd.mat_sym(fd.mat_cof(A)))
        lo, hi = r**d / R, R**d / r
        # relative violation of lo <= c1 <= cd <= hi
        viol = np.maximum((lo - c1) / lo, (cd - hi) / hi)
        worst = max(worst, float(viol.max()))
    return CheckResult("cofactor-spectrum", worst <= 1e-10, worst, 1e-10,
                       "r^d/R <= lambda(cof A) <= R^d/r for r <= lambda(A) <= R")


def check_poincare(rng, n=16, count=100):
    sets = build_index_sets(Grid(2, n))
    cp = poincare_constant(assemble(sets))
    worst = np.inf
    for _ in range(count):
        v = _vanishing_field(rng, sets)
        ratio = fd.h1_seminorm(v, sets) / fd.l2_norm(v, sets)
        worst = min(worst, ratio / cp)
    return CheckResult("poincare", worst >= 1 - 1e-12, worst, 1.0,
                       f"min |v|_1,h / (C_p ||v||_0,h) with C_p = {cp:.6f}")


# ---------------------------------------------------------------------------
# consistency orders


def consistency_errors(kind: str, ns=(8, 16, 32, 64), mode: str = "full"):
    """Max of ``|N_h(r_h u) - r_h f|`` over fixed points, for the smooth problem.

    The fixed points are the interior nodes of the coarsest grid, so each error
    is a truncation error at the same physical locations.
    """
    problem = get_problem("smooth-exp")
    coarse = build_index_sets(Grid(2, ns[0], mode))
    errs = []
    for n in ns:
        if n % ns[0]:
            raise ValueError("grids must refine the coarsest one")
        grid = Grid(2, n, mode)
        sets = build_index_sets(grid)
        r = ma.residual(restrict(grid, problem.exact_u), restrict(grid, problem.f), sets, kind)
        k = n // ns[0]
        errs.append(float(np.max(np.abs(r[::k, ::k][coarse.interior_mask]))))
    return np.array(errs)


def loglog_slope(hs, errs) -> float:
    return float(np.polyfit(np.log(hs), np.log(errs), 1)[0])


def check_consistency(kind: str, threshold: float, ns=(8, 16, 32, 64)):
    errs = consistency_errors(kind, ns)
    hs = 1.0 / np.array(ns, dtype=float)
    slope = loglog_slope(hs, errs)
    pair = np.log2(errs[:-1] / errs[1:])
    return CheckResult(f"consistency-{kind}", slope >= threshold, slope, threshold,
                       "least-squares log-log slope over h = 1/8..1/64; "
                       f"per-halving orders {np.round(pair, 3).tolist()}")


def run_suite(seed: int = 0, faults=()) -> list[CheckResult]:
    ops: dict[str, Callable] = {}
    for name in faults:
        ops.update(FAULTS[name])
    rng = np.random.default_rng(seed)
    return [
        check_integration_by_parts(rng, ops=ops),
        check_energy_identity(rng),
        check_leibniz(rng),
        check_product_rule(rng),
        check_divfree_cof_hat(rng),
        check_cof_sym_commute(rng),
        check_cofactor_trace(rng),
        check_homogeneity(rng),
        check_eig_continuity(rng),
        check_cofactor_spectrum(rng),
        check_poincare(rng),
        check_consistency(ma.CENTRAL, 1.9),
        check_consistency(ma.COMPATIBLE_SYM, 0.9),
    ]
