"""Difference operators, discrete Hessians and per-node matrix kernels.

Every operator acts on the whole array and returns an array of the same
spatial shape.  Where a stencil reaches past the end of the array the result
is NaN; callers pick out the nodes they need with :func:`interior_values`,
which refuses NaNs.  To evaluate near the boundary, pad the input first with
:func:`ghost_extrapolate` and crop afterwards.

Matrix fields have trailing shape ``(d, d)``; ``A[..., i, j]`` is entry
``(i, j)``.  Vector fields have trailing shape ``(d,)``.
"""

from __future__ import annotations

import numpy as np

from .grid import GridIndexSets


class StencilError(ValueError):
    """A stencil needed a node value that is not available."""


# ---------------------------------------------------------------------------
# shifts and first differences


def shift(a: np.ndarray, axis: int, k: int) -> np.ndarray:
    """``out[x] = a[x + k e_axis]``, NaN where ``x + k e_axis`` is off the array."""
    out = np.full(a.shape, np.nan)
    n = a.shape[axis]
    if abs(k) >= n:
        return out
    dst = [slice(None)] * a.ndim
    src = [slice(None)] * a.ndim
    if k >= 0:
        dst[axis] = slice(0, n - k)
        src[axis] = slice(k, n)
    else:
        dst[axis] = slice(-k, n)
        src[axis] = slice(0, n + k)
    out[tuple(dst)] = a[tuple(src)]
    return out


def diff_forward(v, i, h):
    """``(v(x + h e_i) - v(x)) / h``."""
    return (shift(v, i, 1) - v) / h


def diff_backward(v, i, h):
    """``(v(x) - v(x - h e_i)) / h``."""
    return (v - shift(v, i, -1)) / h


def diff_central(v, i, h):
    """``(v(x + h e_i) - v(x - h e_i)) / (2h)``."""
    return (shift(v, i, 1) - shift(v, i, -1)) / (2 * h)


def grad_forward(v: np.ndarray, h: float) -> np.ndarray:
    d = v.ndim
    return np.stack([diff_forward(v, i, h) for i in range(d)], axis=-1)


def grad_backward(v: np.ndarray, h: float) -> np.ndarray:
    d = v.ndim
    return np.stack([diff_backward(v, i, h) for i in range(d)], axis=-1)


def div_field(w: np.ndarray, h: float) -> np.ndarray:
    """Discrete divergence ``sum_i d^i_- w_i`` of a vector field."""
    d = w.shape[-1]
    out = diff_backward(w[..., 0], 0, h)
    for i in range(1, d):
        out = out + diff_backward(w[..., i], i, h)
    return out


def div_rows(A: np.ndarray, h: float) -> np.ndarray:
    """Row-wise divergence of a matrix field: ``(div A)_i = sum_j d^j_- A_ij``."""
    d = A.shape[-1]
    return np.stack([div_field(A[..., i, :], h) for i in range(d)], axis=-1)


def grad_backward_vec(w: np.ndarray, h: float) -> np.ndarray:
    """``(D-bar w)_ij = d^j_- w_i`` for a vector field ``w``."""
    d = w.shape[-1]
    rows = [np.stack([diff_backward(w[..., i], j, h) for j in range(d)], axis=-1)
            for i in range(d)]
    return np.stack(rows, axis=-2)


def grad_backward_mat(A: np.ndarray, h: float) -> np.ndarray:
    """Matrix gradient used by the product rule: ``(D-bar A)_ij = d^i_- A_ij``."""
    d = A.shape[-1]
    out = np.empty(A.shape)
    for i in range(d):
        for j in range(d):
            out[..., i, j] = diff_backward(A[..., i, j], i, h)
    return out


def translation_matrix(w: np.ndarray) -> np.ndarray:
    """``(tau w)_ij(x) = w_j(x - h e_i)``."""
    d = w.shape[-1]
    return np.stack([shift(w, i, -1) for i in range(d)], axis=-2)


def laplacian(v: np.ndarray, h: float) -> np.ndarray:
    """Five-point (seven-point in 3D) Laplacian ``sum_i d^i_+ d^i_- v``."""
    out = diff_backward(diff_forward(v, 0, h), 0, h)
    for i in range(1, v.ndim):
        out = out + diff_backward(diff_forward(v, i, h), i, h)
    return out


# ---------------------------------------------------------------------------
# discrete Hessians


def hessian_ns(v: np.ndarray, h: float) -> np.ndarray:
    """Non-symmetric Hessian, entry ``(i, j)`` is ``d^j_- d^i_+ v``.

    The diagonal is bit-identical to the terms summed in :func:`laplacian`.
    """
    d = v.ndim
    H = np.empty(v.shape + (d, d))
    for i in range(d):
        fi = diff_forward(v, i, h)
        for j in range(d):
            H[..., i, j] = diff_backward(fi, j, h)
    return H


def hessian_central(v: np.ndarray, h: float) -> np.ndarray:
    """Symmetric 9-point Hessian: ``d^i_+ d^i_-`` on the diagonal, products of
    central differences off it."""
    d = v.ndim
    H = np.empty(v.shape + (d, d))
    c = [diff_central(v, i, h) for i in range(d)]
    for i in range(d):
        H[..., i, i] = diff_backward(diff_forward(v, i, h), i, h)
        for j in range(i + 1, d):
            H[..., i, j] = diff_central(c[j], i, h)
            H[..., j, i] = H[..., i, j]
    return H


def hessian_hat(v: np.ndarray, h: float) -> np.ndarray:
    """Backward-backward Hessian ``d^j_- d^i_- v``; symmetric because backward
    differences along different axes commute."""
    d = v.ndim
    H = np.empty(v.shape + (d, d))
    b = [diff_backward(v, i, h) for i in range(d)]
    for i in range(d):
        for j in range(d):
            H[..., i, j] = diff_backward(b[i], j, h)
    return H


# ---------------------------------------------------------------------------
# per-node matrix kernels, vectorized over leading axes


def mat_sym(A):
    return (A + np.swapaxes(A, -1, -2)) / 2


def mat_det(A):
    d = A.shape[-1]
    if d == 2:
        return A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]
    if d == 3:
        return np.einsum("...i,...i->...", A[..., 0, :], np.cross(A[..., 1, :], A[..., 2, :]))
    raise ValueError(f"unsupported matrix size {d}")


def mat_cof(A):
    """Cofactor matrix ``(cof A)_ij = (-1)^(i+j) det(A without row i, col j)``."""
    d = A.shape[-1]
    if d == 2:
        C = np.empty(A.shape)
        C[..., 0, 0] = A[..., 1, 1]
        C[..., 0, 1] = -A[..., 1, 0]
        C[..., 1, 0] = -A[..., 0, 1]
        C[..., 1, 1] = A[..., 0, 0]
        return C
    if d == 3:
        r0, r1, r2 = A[..., 0, :], A[..., 1, :], A[..., 2, :]
        return np.stack([np.cross(r1, r2), np.cross(r2, r0), np.cross(r0, r1)], axis=-2)
    raise ValueError(f"unsupported matrix size {d}")


def frobenius(A, B):
    return np.sum(A * B, axis=(-2, -1))


def eig_minmax_sym(A):
    """Smallest and largest eigenvalue of symmetric ``A`` in closed form.

    2x2 uses the quadratic formula; 3x3 the trigonometric solution of the
    characteristic cubic (accurate to ~1e-10 relative to the matrix scale).
    """
    A = np.asarray(A, dtype=float)
    d = A.shape[-1]
    if d == 2:
        a, b, c = A[..., 0, 0], A[..., 0, 1], A[..., 1, 1]
        mid = (a + c) / 2
        rad = np.hypot((a - c) / 2, b)
        return mid - rad, mid + rad
    if d != 3:
        raise ValueError(f"unsupported matrix size {d}")
    q = np.trace(A, axis1=-2, axis2=-1) / 3
    off = A[..., 0, 1] ** 2 + A[..., 0, 2] ** 2 + A[..., 1, 2] ** 2
    diag = (A[..., 0, 0] - q) ** 2 + (A[..., 1, 1] - q) ** 2 + (A[..., 2, 2] - q) ** 2
    p = np.sqrt((diag + 2 * off) / 6)
    safe_p = np.where(p > 0, p, 1.0)
    B = (A - q[..., None, None] * np.eye(3)) / safe_p[..., None, None]
    r = np.clip(mat_det(B) / 2, -1.0, 1.0)
    phi = np.arccos(r) / 3
    lam_max = q + 2 * p * np.cos(phi)
    lam_min = q + 2 * p * np.cos(phi + 2 * np.pi / 3)
    return lam_min, lam_max


# ---------------------------------------------------------------------------
# ghost values


def ghost_extrapolate(u: np.ndarray, width: int = 1) -> np.ndarray:
    """Pad ``u`` by ``width`` nodes on every side using quadratic extrapolation.

    Along each axis the ghost at ``x_b + k h e`` is the value at that point of
    the quadratic through ``x_b, x_b - h e, x_b - 2h e``.  Axes are padded one
    after the other; quadratic extrapolation is linear and acts on one axis at
    a time, so corner ghosts do not depend on the order.
    """
    if width < 1:
        return np.array(u, dtype=float)
    if min(u.shape) < 3:
        raise StencilError("quadratic extrapolation needs at least 3 nodes per axis")
    out = np.asarray(u, dtype=float)
    for axis in range(u.ndim):
        a = np.moveaxis(out, axis, 0)
        lo, hi = [], []
        for k in range(1, width + 1):
            # Lagrange weights of the quadratic through nodes 0, 1, 2 at -k
            w0, w1, w2 = (k + 1) * (k + 2) / 2, -k * (k + 2), k * (k + 1) / 2
            lo.append(w0 * a[0] + w1 * a[1] + w2 * a[2])
            hi.append(w0 * a[-1] + w1 * a[-2] + w2 * a[-3])
        padded = np.concatenate([np.stack(lo[::-1]), a, np.stack(hi)], axis=0)
        out = np.moveaxis(padded, 0, axis)
    return out


def crop(a: np.ndarray, width: int, ndim: int | None = None) -> np.ndarray:
    """Undo the padding of :func:`ghost_extrapolate` on the first ``ndim`` axes."""
    if width == 0:
        return a
    ndim = a.ndim if ndim is None else ndim
    return a[(slice(width, -width),) * ndim]


def nan_pad(u: np.ndarray, width: int = 1) -> np.ndarray:
    return np.pad(np.asarray(u, dtype=float), width, constant_values=np.nan)


# ---------------------------------------------------------------------------
# restriction to node sets, norms and inner products


def interior_values(a: np.ndarray, sets: GridIndexSets) -> np.ndarray:
    """Values of a (scalar, vector or matrix) field at the interior nodes.

    Returns shape ``(n_interior, ...)``; raises :class:`StencilError` if any of
    them is NaN, i.e. a stencil ran off the lattice.
    """
    vals = a[sets.interior_mask]
    if np.isnan(vals).any():
        raise StencilError("stencil out of range at an interior node; pad with ghosts")
    return vals


def inner_l2(v, w, sets: GridIndexSets) -> float:
    h, d = sets.grid.h, sets.grid.d
    return float(h**d * np.sum(interior_values(v, sets) * interior_values(w, sets)))


def inner_vec(v, w, sets: GridIndexSets) -> float:
    return sum(inner_l2(v[..., i], w[..., i], sets) for i in range(v.shape[-1]))


def l2_norm(v, sets: GridIndexSets) -> float:
    return float(np.sqrt(inner_l2(v, v, sets)))


def h1_seminorm(v, sets: GridIndexSets) -> float:
    """``sqrt(h^d sum_i sum (d^i_+ v)^2)`` over every lattice edge along axis i.

    Summing over all edges, not just edges that start at an interior node, is
    what makes ``-<Delta_h v, v> = |v|_{1,h}^2`` exact for v vanishing on the
    boundary ring.
    """
    grid = sets.grid
    total = 0.0
    for i in range(grid.d):
        fi = diff_forward(v, i, grid.h)
        total += np.nansum(fi**2)
    return float(np.sqrt(grid.h**grid.d * total))


def h1_norm(v, sets: GridIndexSets) -> float:
    return float(np.hypot(l2_norm(v, sets), h1_seminorm(v, sets)))


def max_norm(v, sets: GridIndexSets) -> float:
    return float(np.max(np.abs(interior_values(v, sets))))


def seminorm_1inf(v, sets: GridIndexSets) -> float:
    return float(np.max(np.abs(interior_values(grad_forward(v, sets.grid.h), sets))))


def seminorm_2inf(v, sets: GridIndexSets) -> float:
    return float(np.max(np.abs(interior_values(hessian_ns(v, sets.grid.h), sets))))
