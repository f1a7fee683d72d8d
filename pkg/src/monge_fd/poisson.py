"""Dirichlet Poisson solver for ``-Delta_h w = rhs`` on the interior node set.

The operator is assembled once per grid as a sparse SPD matrix over the
interior unknowns (lexicographic order, C order of the box) and factored with
SuperLU; every later solve reuses the factorization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import fd_ops as fd
from .grid import GridIndexSets


class PoissonError(RuntimeError):
    pass


def _second_difference_1d(m: int, h: float) -> sp.csr_matrix:
    e = np.ones(m)
    return sp.diags([-e[:-1], 2 * e, -e[:-1]], [-1, 0, 1], format="csr") / h**2


def assemble_matrix(sets: GridIndexSets) -> sp.csr_matrix:
    """Matrix of ``-Delta_h`` restricted to interior unknowns.

    Rows: ``2d/h^2`` on the diagonal, ``-1/h^2`` per axis neighbour that is
    itself interior.  Boundary neighbours go into the right-hand side lift.
    """
    d, h = sets.grid.d, sets.grid.h
    m = sets.interior_shape[0]
    if m < 1:
        raise PoissonError("empty interior")
    T = _second_difference_1d(m, h)
    I = sp.identity(m, format="csr")
    A = sp.csr_matrix((m**d, m**d))
    for axis in range(d):
        factors = [T if k == axis else I for k in range(d)]
        term = factors[0]
        for fct in factors[1:]:
            term = sp.kron(term, fct, format="csr")
        A = A + term
    return A.tocsr()


@dataclass
class PoissonSystem:
    sets: GridIndexSets
    matrix: sp.csr_matrix = field(repr=False)
    _lu: spla.SuperLU = field(repr=False)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def apply(self, w: np.ndarray) -> np.ndarray:
        """``-Delta_h w`` at the interior nodes computed through the matrix.

        Returns an array of shape ``(n_interior,)``.  Boundary values of ``w``
        enter through the lift, so this agrees with ``-laplacian(w)``.
        """
        w = np.asarray(w, dtype=float)
        return self.matrix @ w[self.sets.interior_mask] - self.lift(w)

    def lift(self, bc: np.ndarray) -> np.ndarray:
        """Contribution of boundary values: ``Delta_h`` of ``bc`` with its
        interior zeroed, read at the interior nodes."""
        sets = self.sets
        outer = np.where(sets.boundary_mask, bc, 0.0)
        return fd.laplacian(outer, sets.grid.h)[sets.interior_mask]

    def solve(self, rhs: np.ndarray, bc: np.ndarray | None = None) -> np.ndarray:
        """Return ``w`` with ``-Delta_h w = rhs`` inside and ``w = bc`` on the ring.

        ``rhs`` is a full-grid array (only interior values are read) or an
        array of length ``n_interior``.  ``bc`` defaults to zero.
        """
        sets = self.sets
        rhs = np.asarray(rhs, dtype=float)
        b = rhs[sets.interior_mask] if rhs.shape == sets.grid.shape else rhs.ravel()
        if b.shape != (self.size,):
            raise ValueError(f"rhs has shape {rhs.shape}")
        w = np.zeros(sets.grid.shape)
        if bc is not None:
            bc = np.asarray(bc, dtype=float)
            w[sets.boundary_mask] = bc[sets.boundary_mask]
            b = b + self.lift(bc)
        if not np.all(np.isfinite(b)):
            raise PoissonError("non-finite right-hand side")
        x = self._lu.solve(b)
        if not np.all(np.isfinite(x)):
            raise PoissonError("solver produced non-finite values")
        w[sets.interior_mask] = x
        return w

    def smallest_eigenvalue(self, tol: float = 1e-12, max_iter: int = 500) -> float:
        """Smallest eigenvalue of the assembled operator by inverse iteration."""
        rng = np.random.default_rng(0)
        x = rng.random(self.size) + 0.5
        x /= np.linalg.norm(x)
        lam = 0.0
        for _ in range(max_iter):
            y = self._lu.solve(x)
            lam_new = 1.0 / (x @ y)
            x = y / np.linalg.norm(y)
            if abs(lam_new - lam) <= tol * lam_new:
                lam = lam_new
                break
            lam = lam_new
        # Rayleigh quotient on the converged vector
        return float(x @ (self.matrix @ x))


def assemble(sets: GridIndexSets) -> PoissonSystem:
    A = assemble_matrix(sets)
    lu = spla.splu(A.tocsc())
    return PoissonSystem(sets, A, lu)


def smallest_laplacian_eigenvalue(system: PoissonSystem) -> float:
    return system.smallest_eigenvalue()


def poincare_constant(system: PoissonSystem) -> float:
    """``C_p = sqrt(lambda_min(-Delta_h))``, so ``|v|_{1,h} >= C_p ||v||_{0,h}``."""
    return float(np.sqrt(system.smallest_eigenvalue()))
