"""Discrete Monge-Ampere operators and residuals.

Two families are provided:

* ``central``: ``det`` of the symmetric 9-point Hessian, second order.
* ``compatible-*``: the divergence form ``(1/d) div_h[K(u) D_h u]`` with
  ``K(u)`` one of ``cof sym H(u)`` (``compatible-sym``), ``(cof H(u))^T``
  (``compatible-transpose``, 2D only) or ``cof Hhat(u)`` (``compatible-hat``),
  where ``H`` is the forward/backward Hessian and ``Hhat`` the
  backward/backward one.  First order consistent.

The compatible stencil reaches two cells below the evaluation node.  In full
mode the missing nodes next to the lower faces are filled by quadratic
extrapolation; in interior mode the stencil always stays on the lattice.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from . import fd_ops as fd
from .grid import FULL, GridIndexSets

CENTRAL = "central"
COMPATIBLE_SYM = "compatible-sym"
COMPATIBLE_TRANSPOSE = "compatible-transpose"
COMPATIBLE_HAT = "compatible-hat"
SCHEMES = (CENTRAL, COMPATIBLE_SYM, COMPATIBLE_TRANSPOSE, COMPATIBLE_HAT)

_ALIASES = {"central-det": CENTRAL}


def scheme_kind(kind: str) -> str:
    kind = _ALIASES.get(kind, kind)
    if kind not in SCHEMES:
        raise ValueError(f"unknown scheme {kind!r}; expected one of {SCHEMES}")
    return kind


def ma_central(u: np.ndarray, h: float) -> np.ndarray:
    """``det Hbar(u)`` at every node where the 9-point stencil fits."""
    return fd.mat_det(fd.hessian_central(u, h))


def compatible_flux_matrix(u: np.ndarray, h: float, kind: str = COMPATIBLE_SYM) -> np.ndarray:
    """The matrix field ``K(u)`` multiplying ``D_h u`` inside the divergence."""
    kind = scheme_kind(kind)
    if kind == COMPATIBLE_SYM:
        return fd.mat_cof(fd.mat_sym(fd.hessian_ns(u, h)))
    if kind == COMPATIBLE_TRANSPOSE:
        if u.ndim != 2:
            raise ValueError("the transpose variant is defined for d = 2 only")
        return np.swapaxes(fd.mat_cof(fd.hessian_ns(u, h)), -1, -2)
    if kind == COMPATIBLE_HAT:
        return fd.mat_cof(fd.hessian_hat(u, h))
    raise ValueError(f"{kind!r} is not a divergence-form scheme")


def divergence_form(u: np.ndarray, h: float, kind: str = COMPATIBLE_SYM) -> np.ndarray:
    """``(1/d) div_h[K(u) D_h u]`` on the raw array (NaN where undefined)."""
    K = compatible_flux_matrix(u, h, kind)
    flux = np.einsum("...ij,...j->...i", K, fd.grad_forward(u, h))
    return fd.div_field(flux, h) / u.ndim


def ma_compatible(u: np.ndarray, sets: GridIndexSets, kind: str = COMPATIBLE_SYM,
                  ghosts: bool | None = None) -> np.ndarray:
    """Compatible operator at every node, NaN where it is not defined.

    ``ghosts`` defaults to True in full mode and False in interior mode.
    """
    grid = sets.grid
    if ghosts is None:
        ghosts = grid.mode == FULL
    if not ghosts:
        return divergence_form(u, grid.h, kind)
    padded = fd.ghost_extrapolate(u, 1)
    return fd.crop(divergence_form(padded, grid.h, kind), 1)


def apply_scheme(u: np.ndarray, sets: GridIndexSets, kind: str) -> np.ndarray:
    """Evaluate the chosen discrete operator; values off the interior are 0."""
    kind = scheme_kind(kind)
    if kind == CENTRAL:
        out = ma_central(u, sets.grid.h)
    else:
        out = ma_compatible(u, sets, kind)
    vals = fd.interior_values(out, sets)
    res = np.zeros(sets.grid.shape)
    res[sets.interior_mask] = vals
    return res


def residual(u: np.ndarray, f: np.ndarray, sets: GridIndexSets, kind: str) -> np.ndarray:
    """``N_h(u) - f`` on interior nodes, 0 on the boundary ring."""
    u = np.asarray(u, dtype=float)
    f = np.asarray(f, dtype=float)
    if u.shape != sets.grid.shape or f.shape != sets.grid.shape:
        raise ValueError(f"grid mismatch: u {u.shape}, f {f.shape}, expected {sets.grid.shape}")
    out = apply_scheme(u, sets, kind)
    out[sets.interior_mask] -= f[sets.interior_mask]
    return out


class ConvexityReport(NamedTuple):
    min_eig_ns: float
    """min over interior nodes of lambda_1(sym H(u))."""
    min_eig_central: float
    """min over interior nodes of lambda_1(Hbar(u))."""

    @property
    def convex(self) -> bool:
        return self.min_eig_ns >= 0

    @property
    def strictly_convex(self) -> bool:
        return self.min_eig_ns > 0

    @property
    def convex_central(self) -> bool:
        return self.min_eig_central >= 0


def convexity_report(u: np.ndarray, sets: GridIndexSets) -> ConvexityReport:
    h = sets.grid.h
    lam_ns, _ = fd.eig_minmax_sym(fd.interior_values(fd.mat_sym(fd.hessian_ns(u, h)), sets))
    lam_c, _ = fd.eig_minmax_sym(fd.interior_values(fd.hessian_central(u, h), sets))
    return ConvexityReport(float(lam_ns.min()), float(lam_c.min()))
