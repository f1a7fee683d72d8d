# %% [markdown]
# # A degenerate problem
#
# f = 0 with g = |x - 1/2|: the exact solution is not C^1 and the
# linearization degenerates, so the central march converges slowly.

# %%
import numpy as np

from monge_fd import ma_ops as ma
from monge_fd.grid import Grid
from monge_fd.poisson import assemble
from monge_fd.problems import get_problem, grid_data, max_error
from monge_fd.solvers import MarchConfig, initial_guess, march

problem = get_problem("figure2")
sets, f, g = grid_data(problem, Grid(2, 4))
system = assemble(sets)
cfg = MarchConfig(nu=5, kind=ma.CENTRAL, tol_increment=1e-10, tol_residual=1e-14,
                  max_iters=200000, monitor_every=1000)
u, rep = march(initial_guess(f, g, system), f, g, cfg, system)
print(rep.termination, rep.iterations, f"{rep.seconds:.1f}s")
print("deviation from |x - 1/2|:", max_error(u, problem.exact_u, sets))
print(np.round(u, 6))

# %% [markdown]
# Interior mode prescribes data on a two-node ring. At n=4 one node is free and
# the march converges in a few steps; at n=8 it stalls with a large residual.

# %%
for n in (4, 8):
    sets, f, g = grid_data(problem, Grid(2, n, "interior"))
    system = assemble(sets)
    u, rep = march(initial_guess(f, g, system), f, g,
                   MarchConfig(nu=5, kind=ma.CENTRAL, tol_increment=1e-10, monitor_every=1000), system)
    print(n, rep.termination, rep.iterations, f"residual {rep.residuals[-1]:.2e}",
          f"deviation {max_error(u, problem.exact_u, sets):.2e}")
