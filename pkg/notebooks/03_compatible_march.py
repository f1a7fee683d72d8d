# %% [markdown]
# # Time marching with the compatible scheme
#
# Each step solves a Poisson problem with the current residual as right-hand
# side and damps it by 1/nu. The march converges on coarse grids; at h=1/64
# the iteration becomes unstable for this scheme (see the monitor below).

# %%
import numpy as np

from monge_fd import ma_ops as ma
from monge_fd.grid import Grid
from monge_fd.poisson import assemble
from monge_fd.problems import get_problem, grid_data, max_error
from monge_fd.solvers import MarchConfig, initial_guess, march

problem = get_problem("table1")
for n in (4, 8, 16, 32, 64):
    sets, f, g = grid_data(problem, Grid(2, n))
    system = assemble(sets)
    u, rep = march(initial_guess(f, g, system), f, g,
                   MarchConfig(nu=50, kind=ma.COMPATIBLE_SYM, monitor_every=100), system)
    print(f"n={n:<3d} {rep.termination:<20s} iters {rep.iterations:<6d} "
          f"error {max_error(u, problem.exact_u, sets):.4e}")

# %% [markdown]
# The increment history of the last run shows the growth.

# %%
inc = np.array(rep.increments)
print(inc[::max(1, len(inc) // 10)])
