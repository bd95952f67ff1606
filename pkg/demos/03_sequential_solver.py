"""End-to-end equilibrium search on a 40-evaluation budget.

The solver spends a quarter of the budget on a Latin-hypercube design,
then alternates: refit the surrogates, and with probability 1 - epsilon
evaluate the acquisition minimizer found by an evolution strategy
(exploit), otherwise the profile with the largest posterior uncertainty
(explore).  The recommendation is the evaluated profile the final
models consider hardest to improve on unilaterally.
"""

import numpy as np

from nashbo import SolverConfig, make_problem, run, true_regret
from nashbo.games import analytic_regret_saddle

game = make_problem("saddle1")
record = run(game, SolverConfig(total_fes=40, seed=7))

print(f"{game.name}: {record.oracle_calls} oracle calls, seed {record.seed}")
print("\n iter  branch    profile              payoffs          true regret")
best = np.inf
for row in record.rows:
    regret = analytic_regret_saddle(game, row.profile)
    best = min(best, regret)
    mark = " *" if regret == best else ""
    print(f"  {row.iteration:3d}  {row.branch:8s}"
          f"  ({row.profile[0]:.4f}, {row.profile[1]:.4f})"
          f"  ({row.payoffs[0]:+.4f}, {row.payoffs[1]:+.4f})"
          f"  {regret:.3e}{mark}")

rec = record.recommendation
print(f"\nrecommendation: ({rec[0]:.5f}, {rec[1]:.5f})")
print(f"its true regret (numeric oracle): {true_regret(game, rec):.3e}")
print(f"equilibrium: {game.known_ne}")
