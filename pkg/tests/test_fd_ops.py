import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monge_fd import fd_ops as fd
from monge_fd.grid import Grid, build_index_sets, restrict

RNG = np.random.default_rng(1234)


def _quad(x, y):
    return x * x + 3 * x * y + y * y


def _exp(x, y):
    return np.exp((x * x + y * y) / 2)


def _exp_hess(x, y):
    e = _exp(x, y)
    return np.array([[(1 + x * x) * e, x * y * e], [x * y * e, (1 + y * y) * e]])


def _vanishing(sets, rng=RNG):
    v = rng.standard_normal(sets.grid.shape)
    v[sets.boundary_mask] = 0
    return v


# ---------------------------------------------------------------------------
# first differences


def test_first_differences_examples():
    g = Grid(2, 4)
    x1 = restrict(g, lambda x, y: x + 0 * y)
    assert np.all(fd.diff_forward(x1, 0, g.h)[:-1] == 1.0)
    sq = restrict(g, lambda x, y: x * x + 0 * y)
    assert fd.diff_forward(sq, 0, g.h)[2, 1] == 1.25
    assert fd.diff_central(sq, 0, g.h)[2, 1] == 1.0
    assert fd.diff_backward(sq, 0, g.h)[2, 1] == 0.75


def test_differences_nan_off_lattice():
    v = np.ones((5, 5))
    assert np.isnan(fd.diff_forward(v, 0, 0.25)[-1]).all()
    assert np.isnan(fd.diff_backward(v, 1, 0.25)[:, 0]).all()


def test_gradients():
    g = Grid(2, 4)
    v = restrict(g, lambda x, y: x + 2 * y)
    gf = fd.grad_forward(v, g.h)[:-1, :-1]
    assert np.allclose(gf[..., 0], 1, atol=1e-13) and np.allclose(gf[..., 1], 2, atol=1e-13)
    assert np.all(fd.grad_backward(np.full(g.shape, 3.0), g.h)[1:, 1:] == 0)
    xy = restrict(g, lambda x, y: x * y)
    assert fd.grad_forward(xy, g.h)[2, 2, 0] == 0.5


# ---------------------------------------------------------------------------
# Hessians


def _hess_on(hess, v, sets):
    """Hessian at the interior nodes; the backward/backward stencil needs ghosts in full mode."""
    if hess is fd.hessian_hat and sets.grid.mode == "full":
        return fd.interior_values(fd.crop(hess(fd.ghost_extrapolate(v), sets.grid.h), 1, v.ndim), sets)
    return fd.interior_values(hess(v, sets.grid.h), sets)


@pytest.mark.parametrize("hess", [fd.hessian_ns, fd.hessian_central, fd.hessian_hat])
@pytest.mark.parametrize("mode", ["full", "interior"])
def test_hessians_exact_on_quadratics(hess, mode):
    g = Grid(2, 8, mode)
    sets = build_index_sets(g)
    H = _hess_on(hess, restrict(g, _quad), sets)
    assert np.max(np.abs(H - np.array([[2.0, 3.0], [3.0, 2.0]]))) <= 1e-12
    A = _hess_on(hess, restrict(g, lambda x, y: 2 * x - y + 1), sets)
    assert np.max(np.abs(A)) <= 1e-12


def test_hessians_exact_on_quadratics_3d():
    g = Grid(3, 6)
    sets = build_index_sets(g)
    v = restrict(g, lambda x, y, z: x * x + 2 * y * z - z * z + x * y)
    want = np.array([[2.0, 1, 0], [1, 0, 2], [0, 2, -2]])
    for hess in (fd.hessian_ns, fd.hessian_central, fd.hessian_hat):
        H = _hess_on(hess, v, sets)
        assert np.max(np.abs(H - want)) <= 1e-11


def test_hessian_ns_stencil_formula():
    v = RNG.standard_normal((7, 7))
    h = 1 / 6
    H = fd.hessian_ns(v, h)
    x = (3, 2)
    # entry (i=0, j=1): (v(x+e0) - v(x) - v(x+e0-e1) + v(x-e1)) / h^2
    want = (v[4, 2] - v[3, 2] - v[4, 1] + v[3, 1]) / h**2
    assert np.isclose(H[x][0, 1], want, rtol=1e-14)
    assert np.isclose(H[x][0, 0], (v[4, 2] - 2 * v[3, 2] + v[2, 2]) / h**2, rtol=1e-14)


def test_hessian_hat_symmetric_on_random():
    H = fd.hessian_hat(RNG.standard_normal((9, 9)), 1 / 8)
    ok = ~np.isnan(H).any(axis=(-1, -2))
    assert ok.sum() == 49
    assert np.max(np.abs(H[ok][:, 0, 1] - H[ok][:, 1, 0])) <= 1e-13 * np.max(np.abs(H[ok]))


def _entry_error(hess, n, entry, at=(0.5, 0.5)):
    g = Grid(2, n)
    i, j = round(at[0] * n), round(at[1] * n)
    H = hess(restrict(g, _exp), g.h)[i, j]
    return abs(H[entry] - _exp_hess(*at)[entry])


def test_hessian_ns_error_drops_with_h():
    # at (0.5, 0.5) the O(h) term of the mixed entry cancels (x = y); the
    # entries still drop at least as fast as first order
    for entry in [(1, 1), (0, 1)]:
        e16, e32 = (_entry_error(fd.hessian_ns, n, entry) for n in (16, 32))
        assert e16 / e32 >= 1.8
    # off the diagonal the mixed entry is genuinely first order
    e16, e32 = (_entry_error(fd.hessian_ns, n, (0, 1), at=(0.25, 0.75)) for n in (16, 32))
    assert 1.7 <= e16 / e32 <= 2.3


def test_hessian_central_second_order_at_centre():
    for entry in [(0, 0), (0, 1), (1, 1)]:
        e16, e32 = (_entry_error(fd.hessian_central, n, entry) for n in (16, 32))
        assert 3.6 <= e16 / e32 <= 4.4


def _fixed_point_errors(op, exact, ns=(8, 16, 32, 64)):
    errs = []
    for n in ns:
        g = Grid(2, n)
        k = n // ns[0]
        val = op(restrict(g, _exp), g.h)[::k, ::k][1:-1, 1:-1]
        x, y = (c[::k, ::k][1:-1, 1:-1] for c in g.coords)
        errs.append(np.max(np.abs(val - exact(x, y))))
    hs = 1 / np.array(ns, float)
    return np.polyfit(np.log(hs), np.log(errs), 1)[0]


def test_consistency_slopes_of_difference_operators():
    def hx(x, y):
        return _exp_hess(x, y)

    diag = _fixed_point_errors(lambda v, h: fd.hessian_ns(v, h)[..., 0, 0], lambda x, y: hx(x, y)[0, 0])
    mixed_ns = _fixed_point_errors(lambda v, h: fd.hessian_ns(v, h)[..., 0, 1], lambda x, y: hx(x, y)[0, 1])
    mixed_c = _fixed_point_errors(lambda v, h: fd.hessian_central(v, h)[..., 0, 1],
                                  lambda x, y: hx(x, y)[0, 1])
    first = _fixed_point_errors(lambda v, h: fd.diff_forward(v, 0, h), lambda x, y: x * _exp(x, y))
    assert diag >= 1.9
    assert mixed_ns >= 0.9
    assert mixed_c >= 1.9
    assert first >= 0.9


# ---------------------------------------------------------------------------
# Laplacian, divergence


def test_laplacian_examples():
    g = Grid(2, 8)
    sets = build_index_sets(g)
    lap = fd.interior_values(fd.laplacian(restrict(g, lambda x, y: x * x + y * y), g.h), sets)
    assert np.max(np.abs(lap - 4)) <= 1e-11
    aff = fd.interior_values(fd.laplacian(restrict(g, lambda x, y: 3 * x - y), g.h), sets)
    assert np.max(np.abs(aff)) <= 1e-11


def test_laplacian_identities_bit_exact():
    v = RNG.standard_normal((9, 9))
    h = 1 / 8
    lap = fd.laplacian(v, h)
    assert np.array_equal(lap, fd.div_field(fd.grad_forward(v, h), h), equal_nan=True)
    assert np.array_equal(lap, np.trace(fd.hessian_ns(v, h), axis1=-2, axis2=-1), equal_nan=True)


def test_div_field_examples():
    g = Grid(2, 8)
    w = np.stack(g.coords, axis=-1)
    assert np.allclose(fd.div_field(w, g.h)[1:, 1:], 2, atol=1e-12)
    assert np.all(fd.div_field(np.ones(g.shape + (2,)), g.h)[1:, 1:] == 0)


# ---------------------------------------------------------------------------
# matrix kernels


def test_mat_kernels_examples():
    assert np.array_equal(fd.mat_cof(np.array([[2.0, 1], [1, 3]])), [[3, -1], [-1, 2]])
    for d in (2, 3):
        assert np.array_equal(fd.mat_cof(np.eye(d)), np.eye(d))
        assert fd.mat_det(np.eye(d)) == 1
        assert fd.frobenius(np.eye(d), np.eye(d)) == d
        assert fd.frobenius(RNG.standard_normal((d, d)), np.zeros((d, d))) == 0
    assert np.array_equal(fd.mat_cof(np.array([[1.0, 2], [3, 4]])), [[4, -3], [-2, 1]])


def test_mat_sym_exactly_symmetric():
    S = fd.mat_sym(RNG.standard_normal((50, 3, 3)))
    assert np.array_equal(S, np.swapaxes(S, -1, -2))


@pytest.mark.parametrize("d", [2, 3])
def test_cof_is_det_times_inverse_transpose(d):
    A = RNG.standard_normal((200, d, d)) + 3 * np.eye(d)
    want = np.linalg.det(A)[:, None, None] * np.swapaxes(np.linalg.inv(A), -1, -2)
    assert np.max(np.abs(fd.mat_cof(A) - want)) <= 1e-12 * np.max(np.abs(want))
    assert np.allclose(fd.mat_det(A), np.linalg.det(A), rtol=1e-12, atol=0)


@pytest.mark.parametrize("d", [2, 3])
def test_cofactor_trace_identity(d):
    A = RNG.standard_normal((500, d, d))
    assert np.allclose(fd.frobenius(fd.mat_cof(A), A), d * fd.mat_det(A), rtol=0, atol=1e-12)


def test_eig_examples():
    lo, hi = fd.eig_minmax_sym(np.array([[2.0, 1], [1, 2]]))
    assert np.isclose(lo, 1, atol=1e-15) and np.isclose(hi, 3, atol=1e-15)
    assert fd.eig_minmax_sym(np.diag([5.0, -2.0])) == (-2.0, 5.0)
    lo, hi = fd.eig_minmax_sym(np.diag([4.0, 1.0, 7.0]))
    assert np.isclose(lo, 1, atol=1e-12) and np.isclose(hi, 7, atol=1e-12)


@pytest.mark.parametrize("d", [2, 3])
def test_eig_against_dense_oracle(d):
    A = fd.mat_sym(RNG.standard_normal((2000, d, d)))
    A /= np.abs(A).max(axis=(1, 2), keepdims=True)
    lo, hi = fd.eig_minmax_sym(A)
    ev = np.linalg.eigvalsh(A)
    assert np.max(np.abs(lo - ev[:, 0])) <= 1e-10
    assert np.max(np.abs(hi - ev[:, -1])) <= 1e-10
    if d == 3:
        mid = np.trace(A, axis1=1, axis2=2) - lo - hi
        assert np.max(np.abs(lo * mid * hi - fd.mat_det(A))) <= 1e-9


def test_eig_repeated_eigenvalues_3d():
    lo, hi = fd.eig_minmax_sym(2.5 * np.eye(3))
    assert lo == hi == 2.5


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3]))
def test_eigenvalue_continuity(seed, d):
    rng = np.random.default_rng(seed)
    A, B = fd.mat_sym(rng.standard_normal((2, 20, d, d)))
    la, La = fd.eig_minmax_sym(A)
    lb, Lb = fd.eig_minmax_sym(B)
    bound = d * np.abs(A - B).max(axis=(1, 2)) + 1e-12
    assert np.all(np.abs(la - lb) <= bound) and np.all(np.abs(La - Lb) <= bound)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3]))
def test_cofactor_spectrum_bounds(seed, d):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((20, d, d)))
    lam = rng.uniform(0.05, 20.0, (20, d))
    A = fd.mat_sym(np.einsum("nij,nj,nkj->nik", Q, lam, Q))
    r, R = lam.min(axis=1), lam.max(axis=1)
    ev = np.linalg.eigvalsh(fd.mat_sym(fd.mat_cof(A)))
    assert np.all(ev[:, 0] >= r**d / R * (1 - 1e-9))
    assert np.all(ev[:, -1] <= R**d / r * (1 + 1e-9))


def test_cof_sym_commutes_in_2d():
    H = fd.hessian_ns(RNG.standard_normal((9, 9)), 1 / 8)
    a, b = fd.mat_cof(fd.mat_sym(H)), fd.mat_sym(fd.mat_cof(H))
    assert np.nanmax(np.abs(a - b)) <= 1e-13 * np.nanmax(np.abs(a))


def test_cof_hat_rows_divergence_free():
    h = 1 / 8
    K = fd.mat_cof(fd.hessian_hat(RNG.standard_normal((9, 9)), h))
    div = fd.div_rows(K, h)
    assert np.nanmax(np.abs(div)) <= 1e-12 * np.nanmax(np.abs(K)) / h
    assert np.isfinite(div[2:, 2:]).all()


# ---------------------------------------------------------------------------
# translation matrix, Leibniz, product rule


def test_translation_matrix_examples():
    c = np.array([1.5, -2.0])
    tau = fd.translation_matrix(np.broadcast_to(c, (6, 6, 2)))
    assert np.all(tau[1:, 1:] == c)
    g = Grid(2, 5)
    w = fd.grad_forward(restrict(g, lambda x, y: 2 * x + 3 * y), g.h)
    tau = fd.translation_matrix(w)[1:-1, 1:-1]
    assert np.allclose(tau, [[2, 3], [2, 3]], atol=1e-13)


def test_translation_matrix_definition():
    w = RNG.standard_normal((6, 6, 2))
    tau = fd.translation_matrix(w)
    # (tau w)_ij(x) = w_j(x - h e_i)
    assert tau[3, 4, 0, 1] == w[2, 4, 1] and tau[3, 4, 1, 0] == w[3, 3, 0]


def test_leibniz_rule():
    v, w = RNG.standard_normal((2, 9, 9))
    h = 1 / 8
    for i in range(2):
        lhs = fd.diff_backward(v * w, i, h)
        rhs = v * fd.diff_backward(w, i, h) + fd.shift(w, i, -1) * fd.diff_backward(v, i, h)
        assert np.nanmax(np.abs(lhs - rhs)) <= 1e-12 * np.nanmax(np.abs(lhs))


def test_product_rule():
    h = 1 / 8
    A = RNG.standard_normal((9, 9, 2, 2))
    w = RNG.standard_normal((9, 9, 2))
    lhs = fd.div_field(np.einsum("...ij,...j->...i", A, w), h)
    rhs = (fd.frobenius(fd.grad_backward_mat(A, h), fd.translation_matrix(w))
           + fd.frobenius(A, np.swapaxes(fd.grad_backward_vec(w, h), -1, -2)))
    assert np.nanmax(np.abs(lhs - rhs)) <= 1e-12 * np.nanmax(np.abs(lhs))


# ---------------------------------------------------------------------------
# norms and inner products


def test_norm_examples():
    sets = build_index_sets(Grid(2, 4))
    one = np.ones(sets.grid.shape)
    assert fd.l2_norm(one, sets) == 0.75
    assert fd.h1_seminorm(np.full(sets.grid.shape, 3.2), sets) == 0
    assert fd.inner_l2(one, one, sets) == 9 / 16
    assert fd.inner_l2(one, np.zeros_like(one), sets) == 0
    sets8 = build_index_sets(Grid(2, 8))
    assert fd.seminorm_2inf(restrict(sets8.grid, lambda x, y: x + 0 * y), sets8) <= 1e-12
    v = -np.ones(sets.grid.shape)
    assert fd.max_norm(v, sets) == 1.0
    assert fd.h1_norm(one, sets) == 0.75


def test_seminorm_1inf_affine():
    sets = build_index_sets(Grid(2, 8))
    v = restrict(sets.grid, lambda x, y: -3 * x + y)
    assert np.isclose(fd.seminorm_1inf(v, sets), 3, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["full", "interior"]), st.integers(6, 12))
def test_integration_by_parts(seed, mode, n):
    rng = np.random.default_rng(seed)
    sets = build_index_sets(Grid(2, n, mode))
    h = sets.grid.h
    v, w = _vanishing(sets, rng), _vanishing(sets, rng)
    for i in range(2):
        lhs = fd.inner_l2(fd.diff_forward(v, i, h), w, sets)
        rhs = -fd.inner_l2(v, fd.diff_backward(w, i, h), sets)
        assert abs(lhs - rhs) <= 1e-13 * (abs(lhs) + abs(rhs) + 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["full", "interior"]))
def test_energy_identity(seed, mode):
    rng = np.random.default_rng(seed)
    sets = build_index_sets(Grid(2, 8, mode))
    v = _vanishing(sets, rng)
    lhs = -fd.inner_l2(fd.laplacian(v, sets.grid.h), v, sets)
    assert np.isclose(lhs, fd.h1_seminorm(v, sets) ** 2, rtol=1e-12, atol=0)


def test_inner_vec_sums_components():
    sets = build_index_sets(Grid(2, 6))
    a, b = RNG.standard_normal((2, 7, 7, 2))
    want = fd.inner_l2(a[..., 0], b[..., 0], sets) + fd.inner_l2(a[..., 1], b[..., 1], sets)
    assert fd.inner_vec(a, b, sets) == want


def test_interior_values_detects_off_lattice_stencil():
    sets = build_index_sets(Grid(2, 8, "full"))
    with pytest.raises(fd.StencilError):
        fd.interior_values(fd.hessian_hat(np.ones(sets.grid.shape), sets.grid.h), sets)


# ---------------------------------------------------------------------------
# ghosts


def test_ghost_exact_on_quadratics_and_affine():
    for phi in (lambda x, y: 2 * x - y, lambda x, y: x * x - 3 * x * y + 2 * y * y):
        g = Grid(2, 8)
        big = fd.ghost_extrapolate(restrict(g, phi), 1)
        x = np.arange(-1, 10) / 8
        X, Y = np.meshgrid(x, x, indexing="ij")
        assert np.max(np.abs(big - phi(X, Y))) <= 1e-12


def test_ghost_weights():
    u = np.arange(5.0) ** 3
    ghost = fd.ghost_extrapolate(u, 1)
    assert ghost[0] == 3 * u[0] - 3 * u[1] + u[2]
    assert ghost[-1] == 3 * u[-1] - 3 * u[-2] + u[-3]


def test_ghost_third_order():
    errs = []
    for n in (16, 32):
        g = Grid(2, n)
        big = fd.ghost_extrapolate(restrict(g, _exp), 1)
        # exterior point (1 + h, 0.5); at x = 0 the third x-derivative of this
        # even profile vanishes and the ghost error is O(h^4) instead
        errs.append(abs(big[-1, n // 2 + 1] - _exp(1 + 1 / n, 0.5)))
    assert 7.0 <= errs[0] / errs[1] <= 9.0


def test_ghost_needs_three_nodes():
    with pytest.raises(fd.StencilError):
        fd.ghost_extrapolate(np.ones((2, 5)))
