# %% [markdown]
# # Chained and rescaled solves
#
# The central march gives a cheap convex starting point; the compatible march
# then refines it. Rescaling solves for beta*u with data (beta^2 f, beta g).

# %%
from monge_fd import ma_ops as ma
from monge_fd.grid import Grid
from monge_fd.poisson import assemble
from monge_fd.problems import get_problem, grid_data, max_error
from monge_fd.solvers import MarchConfig, chained_solve, initial_guess, march, rescale_solve

problem = get_problem("table2")
sets, f, g = grid_data(problem, Grid(2, 32))
system = assemble(sets)
u, rep = chained_solve(f, g, system,
                       MarchConfig(nu=850, kind=ma.CENTRAL, max_iters=10000, monitor_every=100),
                       MarchConfig(nu=850, kind=ma.COMPATIBLE_SYM, monitor_every=100))
print(rep.method, rep.termination, rep.iterations, f"{max_error(u, problem.exact_u, sets):.4e}")

# %%
problem = get_problem("table1")
sets, f, g = grid_data(problem, Grid(2, 16))
system = assemble(sets)
cfg = MarchConfig(nu=50, monitor_every=100)


def direct(f, g, system):
    return march(initial_guess(f, g, system), f, g, cfg, system)


u1, r1 = direct(f, g, system)
u2, r2 = rescale_solve(f, g, system, direct, beta=2.0)
print(r1.iterations, r2.iterations, abs(u1 - u2).max())
