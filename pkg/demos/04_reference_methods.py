"""The reference methods, and why evaluation cost matters.

Iterated best response converges quickly in rounds, but every inner
payoff evaluation counts: one round of numeric best responses costs
thousands of oracle calls, where the surrogate-guided solver spends
forty in total.  The random design and the lattice-restricted solver
bracket the problem from the other side: no model, and a model that
cannot leave its grid.
"""

import numpy as np

from nashbo import (
    BRConfig,
    SolverConfig,
    grid_solver,
    iterated_br,
    make_problem,
    random_baseline,
    run,
)
from nashbo.games import analytic_regret_saddle

game = make_problem("saddle2")
score = lambda rec: min(analytic_regret_saddle(game, r.profile) for r in rec.rows)  # noqa: E731

# Iterated best response from a poor corner start.
traj = iterated_br(game, np.array([0.9, 0.9]), cfg=BRConfig(seed=0))
print("iterated best response:")
for x, cost, regret in zip(traj.profiles, traj.costs, traj.regrets):
    print(f"  after {cost:5d} evaluations: ({x[0]:.4f}, {x[1]:.4f})"
          f"  regret {regret:.3e}")
print(f"  total bill including the convergence check: {traj.fe_cost} evaluations")

# Everything below runs on the same 40-call budget the solver gets.
budget = 40
bn = run(game, SolverConfig(total_fes=budget, seed=1))
rnd = random_baseline(game, budget, seed=1, eval_cfg=BRConfig(inner_budget=400))
grid = grid_solver(game, SolverConfig(total_fes=budget, seed=1), grid_per_dim=10)

print(f"\nbest true regret within {budget} oracle calls:")
print(f"  surrogate-guided search : {score(bn):.3e}")
print(f"  random design           : {score(rnd):.3e}")
print(f"  10-per-axis lattice     : {score(grid):.3e}")

# The lattice method cannot do better than its best lattice point.
line = np.linspace(0.0, 1.0, 10)
floor = min(analytic_regret_saddle(game, np.array([a, b]))
            for a in line for b in line)
print(f"  lattice floor           : {floor:.3e} (equilibrium at 0.3 is off-grid)")
