"""The approximate-regret acquisition, closed form and sampled.

For a candidate profile x, each player's best-response payoff is
estimated optimistically as mu_bar + gamma * sigma_bar, where mu_bar
and sigma_bar are the mean and spread of the surrogate posterior mean
over that player's own actions with the opponents frozen at x.  The
acquisition is the largest estimated unilateral improvement; its
minimizers are the profiles the models consider closest to equilibrium.

Both block statistics have exact erf closed forms; a Latin-hypercube
sampled estimator provides an independent route to the same numbers.
"""

import numpy as np

from nashbo import (
    AcquisitionConfig,
    RegretAcquisition,
    bar_mu_exact,
    bar_mu_sampled,
    bar_sigma_exact,
    bar_sigma_sampled,
    fit,
    make_problem,
    oracle_eval,
)
from nashbo.games import ObservationSet
from nashbo.sampling import latin_hypercube

game = make_problem("saddle1")
rng = np.random.default_rng(3)

obs = ObservationSet()
for x in game.space.from_unit(latin_hypercube(12, 2, rng)):
    obs.append(oracle_eval(game, x, rng))
X = obs.profiles()
surrogates = [fit(X, obs.payoffs(i), rng=i) for i in range(2)]

# Exact and sampled block statistics agree to Monte-Carlo accuracy.
x = np.array([0.4, 0.6])
space = game.space
for i in range(2):
    mu = bar_mu_exact(surrogates[i], space, i, x)
    sd = bar_sigma_exact(surrogates[i], space, i, x)
    mu_s = bar_mu_sampled(surrogates[i], space, i, x, 20_000, np.random.default_rng(9))
    sd_s = bar_sigma_sampled(surrogates[i], space, i, x, 20_000, np.random.default_rng(9))
    print(f"player {i}: mu_bar exact {mu:+.5f} sampled {mu_s:+.5f}   "
          f"sigma_bar exact {sd:.5f} sampled {sd_s:.5f}")

# The acquisition landscape on a coarse grid: low values cluster
# around the saddle point at (0.5, 0.5).
acq = RegretAcquisition(surrogates, space, AcquisitionConfig())
line = np.linspace(0.05, 0.95, 7)
grid = np.array([[a, b] for a in line for b in line])
vals = acq.value_batch(grid).reshape(7, 7)
print("\nacquisition values (rows: x0, columns: x1)")
for a, row in zip(line, vals):
    print(f"  x0={a:.2f}  " + " ".join(f"{v:7.4f}" for v in row))
best = grid[np.argmin(vals)]
print(f"\ngrid minimizer: {best} (equilibrium at {game.known_ne})")
