# %% [markdown]
# # Discrete operators on the unit square
#
# Mesh functions are plain arrays of shape (n+1, n+1). Differences that would
# leave the lattice come back as NaN, so stencil reach is visible directly.

# %%
import numpy as np

from monge_fd import fd_ops as fd
from monge_fd import ma_ops as ma
from monge_fd.grid import Grid, build_index_sets, restrict

grid = Grid(2, 8)
sets = build_index_sets(grid)
print(grid, sets.interior_mask.sum(), "interior nodes")

# %% [markdown]
# Quadratics are reproduced exactly by every Hessian stencil.

# %%
q = restrict(grid, lambda x, y: x * x + x * y + y * y)
print(fd.hessian_central(q, grid.h)[4, 4])
for kind in ma.SCHEMES:
    print(kind, np.abs(ma.apply_scheme(q, sets, kind)[sets.interior_mask] - 3).max())

# %% [markdown]
# Summation by parts: for v vanishing on the boundary, -<div D v, v> equals
# the squared discrete H1 seminorm.

# %%
rng = np.random.default_rng(0)
v = rng.standard_normal(grid.shape)
v[sets.boundary_mask] = 0
lhs = -fd.inner_l2(fd.laplacian(v, grid.h), v, sets)
print(lhs, fd.h1_seminorm(v, sets) ** 2)

# %% [markdown]
# Truncation error of the two Monge-Ampere operators on u = exp(|x|^2 / 2)
# at fixed nodes: second order for the central determinant, first order
# (pre-asymptotic on coarse grids) for the divergence form.

# %%
from monge_fd import verify

for kind in (ma.CENTRAL, ma.COMPATIBLE_SYM):
    errs = verify.consistency_errors(kind)
    print(kind, errs, np.log2(errs[:-1] / errs[1:]))
