# %% [markdown]
# # Newton's method for the central scheme
#
# The Jacobian of det(Hbar u) is assembled from the cofactor of Hbar, so each
# step is one sparse solve. Five steps reach roundoff on every grid.

# %%
from monge_fd.grid import Grid, build_index_sets
from monge_fd.poisson import assemble
from monge_fd.problems import convergence_table, get_problem, grid_data
from monge_fd.solvers import NewtonConfig, initial_guess, newton_central


def solve(problem, grid):
    sets = build_index_sets(grid)
    _, f, g = grid_data(problem, grid)
    return newton_central(initial_guess(f, g, assemble(sets)), f, g, sets, NewtonConfig())


rows = convergence_table(get_problem("table3"), [4, 8, 16, 32, 64, 128], solve)
for r in rows:
    print(f"h=1/{round(1 / r.h):<4d} error {r.error:.3e} order {r.order or float('nan'):.2f} "
          f"iters {r.iterations} {r.seconds:.3f}s")
