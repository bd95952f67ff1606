"""Fit per-player payoff surrogates from a handful of oracle calls.

Each player gets an independent Gaussian-process model of their own
payoff over the joint action space.  The kernel is a squared-exponential
with per-coordinate inverse length-scales plus a white term for
observation noise; hyperparameters come from marginal-likelihood
maximization.
"""

import numpy as np

from nashbo import ObservationSet, fit, make_problem, oracle_eval
from nashbo.sampling import latin_hypercube

game = make_problem("saddle1", noise=True)
rng = np.random.default_rng(0)

# A small space-filling design, evaluated through the noisy oracle.
obs = ObservationSet(allow_duplicates=True)
design = game.space.from_unit(latin_hypercube(15, game.space.n_joint, rng))
for x in design:
    obs.append(oracle_eval(game, x, rng))

X = obs.profiles()
print(f"observed {len(obs)} profiles of {game.name}")

# One surrogate per player, fitted independently on the same design.
surrogates = [fit(X, obs.payoffs(i), restarts=2, rng=i) for i in range(game.players)]
for i, s in enumerate(surrogates):
    p = s.params
    print(f"player {i}: fitted v={p.v:.4g} c={p.c:.4g} "
          f"d={np.array2string(p.d, precision=3)}")

# The fitted white term should sit near the true noise variance.
print(f"true noise variance: {game.noise_std[0] ** 2:.4g}")

# Posterior mean versus truth along a slice through the equilibrium.
line = np.linspace(0.0, 1.0, 9)
slice_pts = np.column_stack([line, np.full(9, 0.5)])
mu = surrogates[0].posterior_mean(slice_pts)
truth = [game.payoffs(x)[0] for x in slice_pts]
print("\n  x0    posterior    exact")
for x0, m, t in zip(line, mu, truth):
    print(f"  {x0:.3f}  {m:+.4f}    {t:+.4f}")
