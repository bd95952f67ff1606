"""Sequential search for low-regret profiles of an expensive game.

Algorithm: evaluate a Latin-hypercube initial design, then iterate
(fit per-player surrogates on everything seen) -> (with probability
1 - epsilon, minimize the regret acquisition over the joint box;
otherwise maximize the largest posterior standard deviation) ->
(evaluate the chosen profile through the noisy oracle), until exactly
``total_fes`` oracle calls are spent.  The recommendation is the
evaluated profile the final surrogates consider hardest to improve on
unilaterally.

All internal coordinates live on the unit box (the acquisition's closed
forms require it); native coordinates appear only at the oracle boundary
and in the returned rows.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import globalopt
from .acquisition import AcquisitionConfig, RegretAcquisition
from .games import GameSpec, ObservationSet, Profile, oracle_eval
from .gp import FittingError, PlayerSurrogate, fit
from .sampling import latin_hypercube

_UNIT_PERTURB = 1e-6  # box-width fraction for duplicate-proposal nudges


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters: budget, split, branch probability, inner budgets."""

    total_fes: int
    init_size: int | None = None
    epsilon: float = 0.05
    acq_budget: int = 250
    acq: AcquisitionConfig = field(default_factory=AcquisitionConfig)
    fit_restarts: int = 2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.total_fes < 3:
            raise ValueError("need at least three oracle evaluations")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must lie in [0, 1)")
        if self.acq_budget < 1 or self.fit_restarts < 0:
            raise ValueError("acq_budget >= 1 and fit_restarts >= 0 required")
        init = self.resolved_init_size()
        if not 2 <= init < self.total_fes:
            raise ValueError(
                f"initial design of {init} must leave room for sequential steps"
            )

    def resolved_init_size(self) -> int:
        """Explicit initial-design size, or a quarter of the budget."""
        return self.init_size if self.init_size is not None else max(2, self.total_fes // 4)


@dataclass(frozen=True)
class IterationRow:
    """One oracle call: what was asked, why, and what came back."""

    iteration: int
    profile: Profile
    payoffs: np.ndarray
    branch: str  # "init", "exploit" or "explore"
    regret_estimate: float  # acquisition value at selection; NaN off the exploit branch
    wall_ms: float


@dataclass
class RunRecord:
    rows: list[IterationRow]
    recommendation: Profile
    oracle_calls: int
    seed: int
    aborted: bool = False
    true_regrets: list[float] | None = None  # analysis-side, filled by callers


def initial_design(space, n: int, rng: np.random.Generator) -> np.ndarray:
    """(n, n_joint) Latin-hypercube profiles in the space's native coordinates."""
    return space.from_unit(latin_hypercube(n, space.n_joint, rng))


def choose_branch(rng: np.random.Generator, epsilon: float) -> str:
    """One epsilon-greedy draw: "explore" with probability epsilon."""
    return "explore" if rng.random() < epsilon else "exploit"


def _max_sigma_objective(surrogates: Sequence[PlayerSurrogate]):
    def f(x: np.ndarray) -> float:
        return max(math.sqrt(s.posterior_var(x)) for s in surrogates)
    return f


def select_next(surrogates: Sequence[PlayerSurrogate], space, cfg: SolverConfig,
                rng: np.random.Generator) -> tuple[Profile, str, float]:
    """Pick the next unit-box profile to evaluate.

    Draws the branch once, then runs the inner global optimizer with
    ``cfg.acq_budget`` evaluations: acquisition minimization on the
    exploit branch, max-posterior-std maximization on the explore
    branch.  Returns (profile, branch, acquisition value or NaN).
    """
    branch = choose_branch(rng, cfg.epsilon)
    seed = int(rng.integers(2**31 - 1))
    box = np.tile([0.0, 1.0], (space.n_joint, 1))
    budget = globalopt.OptBudget(max_evals=cfg.acq_budget, seed=seed)
    if branch == "exploit":
        acq = RegretAcquisition(surrogates, space, cfg.acq)
        if cfg.acq.mode == "sampled":
            obj_rng = np.random.default_rng(int(rng.integers(2**31 - 1)))
            x, val = globalopt.minimize(lambda z: acq.value(z, obj_rng), box, budget)
        else:
            x, val = globalopt.minimize(acq.value, box, budget)
        return x, branch, float(val)
    x, _ = globalopt.maximize(_max_sigma_objective(surrogates), box, budget)
    return x, branch, float("nan")


def recommend(record: RunRecord, surrogates: Sequence[PlayerSurrogate], space,
              acq: AcquisitionConfig, rng: np.random.Generator | None = None) -> Profile:
    """Evaluated profile minimizing the acquisition under the final surrogates.

    Ties resolve to the earliest evaluation; duplicates collapse onto
    their first occurrence before scoring.
    """
    uniq: list[np.ndarray] = []
    for row in record.rows:
        if not any(np.array_equal(row.profile, u) for u in uniq):
            uniq.append(row.profile)
    evaluator = RegretAcquisition(surrogates, space.as_unit(), acq)
    units = np.array([space.to_unit(u) for u in uniq])
    vals = evaluator.value_batch(units, rng)
    return uniq[int(np.argmin(vals))]


def _fit_all(X_unit: np.ndarray, obs: ObservationSet, players: int, cfg: SolverConfig,
             rng: np.random.Generator) -> list[PlayerSurrogate]:
    return [
        fit(X_unit, obs.payoffs(i), restarts=cfg.fit_restarts, rng=rng)
        for i in range(players)
    ]


def run(game: GameSpec, cfg: SolverConfig) -> RunRecord:
    """Full budgeted run against the game's noisy oracle.

    Spends exactly ``cfg.total_fes`` oracle calls unless every
    hyperparameter fit attempt fails mid-run, in which case the record
    comes back flagged ``aborted`` with the rows gathered so far.
    Deterministic given (game, cfg).
    """
    if not 0.0 < cfg.epsilon < 1.0:
        raise ValueError("runs need epsilon strictly inside (0, 1)")
    space = game.space
    uspace = space.as_unit()
    ss = np.random.SeedSequence(cfg.seed)
    rng_design, rng_noise, rng_select, rng_fit = map(np.random.default_rng, ss.spawn(4))

    obs = ObservationSet(allow_duplicates=game.noisy)
    unit_rows: list[np.ndarray] = []
    rows: list[IterationRow] = []

    def observe(u: np.ndarray, branch: str, estimate: float, started: float) -> None:
        ob = oracle_eval(game, space.from_unit(u), rng_noise)
        obs.append(ob)
        unit_rows.append(u)
        rows.append(IterationRow(
            iteration=len(rows) + 1, profile=ob.profile, payoffs=ob.payoffs,
            branch=branch, regret_estimate=estimate,
            wall_ms=(time.perf_counter() - started) * 1e3,
        ))

    init = cfg.resolved_init_size()
    for u in latin_hypercube(init, space.n_joint, rng_design):
        observe(u, "init", float("nan"), time.perf_counter())

    surrogates: list[PlayerSurrogate] | None = None
    aborted = False
    while len(rows) < cfg.total_fes:
        started = time.perf_counter()
        X_unit = np.array(unit_rows)
        try:
            surrogates = _fit_all(X_unit, obs, game.players, cfg, rng_fit)
        except (FittingError, np.linalg.LinAlgError):
            try:
                surrogates = _fit_all(X_unit, obs, game.players, cfg, rng_fit)
            except (FittingError, np.linalg.LinAlgError):
                aborted = True
                break
        u, branch, estimate = select_next(surrogates, uspace, cfg, rng_select)
        if not game.noisy:
            # exact repeats would make the noise-free Gram matrix singular
            while any(np.array_equal(space.from_unit(u), o.profile) for o in obs):
                u = np.clip(u + rng_select.uniform(-_UNIT_PERTURB, _UNIT_PERTURB, u.shape),
                            0.0, 1.0)
        observe(u, branch, estimate, started)

    record = RunRecord(rows=rows, recommendation=rows[0].profile,
                       oracle_calls=len(rows), seed=cfg.seed, aborted=aborted)
    rec_rng = np.random.default_rng(int(rng_select.integers(2**31 - 1)))
    if not aborted:
        surrogates = _fit_all(np.array(unit_rows), obs, game.players, cfg, rng_fit)
        record.recommendation = recommend(record, surrogates, space, cfg.acq, rec_rng)
    elif surrogates is not None:
        record.recommendation = recommend(record, surrogates, space, cfg.acq, rec_rng)
    return record
