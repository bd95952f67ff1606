"""Reference methods and analysis-side tools built on exact payoffs.

Everything here needs the game's exact utility functions: numeric best
responses, the true-regret evaluator used to score runs after the fact,
an iterated-best-response baseline that pays for every utility
evaluation it makes, a uniform random-design baseline, and a variant of
the sequential solver whose proposals are restricted to a fixed lattice.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from . import globalopt
from .acquisition import RegretAcquisition
from .games import GameSpec, ObservationSet, Profile, UtilitiesUnavailableError, oracle_eval
from .gp import FittingError
from .sampling import latin_hypercube
from .solver import IterationRow, RunRecord, SolverConfig, _fit_all, choose_branch, recommend


@dataclass(frozen=True)
class BRConfig:
    """Budget for one numeric best-response search.

    ``inner_budget`` utility evaluations total, split evenly across
    ``restarts + 1`` optimizer runs.
    """

    inner_budget: int = 2000
    restarts: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.inner_budget < self.restarts + 1:
            raise ValueError("inner_budget must cover every restart")
        if self.restarts < 0:
            raise ValueError("restarts must be non-negative")


def _derived_seed(*entropy) -> int:
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def best_response(game: GameSpec, player: int, x_minus: np.ndarray,
                  cfg: BRConfig | None = None) -> np.ndarray:
    """Numerically maximize one player's payoff over their own block.

    Opponent coordinates are frozen at ``x_minus`` (stacked in joint
    order).  Returns the best block found; exact utilities required.
    """
    if game.utilities is None:
        raise UtilitiesUnavailableError(
            f"best response needs exact payoffs, which {game.name!r} lacks"
        )
    cfg = cfg or BRConfig()
    space = game.space
    blk = space.block(player)
    oth = space.other_indices(player)
    x_minus = np.asarray(x_minus, dtype=float)
    if x_minus.shape != (len(oth),):
        raise ValueError("x_minus must stack all opponent coordinates in joint order")

    full = np.empty(space.n_joint)
    full[oth] = x_minus
    u = game.utilities[player]

    def objective(block: np.ndarray) -> float:
        full[blk] = block
        return u(full)

    runs = cfg.restarts + 1
    per_run = cfg.inner_budget // runs
    extra = cfg.inner_budget - per_run * runs
    children = np.random.SeedSequence((cfg.seed, player)).spawn(runs)
    best_block, best_val = None, -np.inf
    for r, child in enumerate(children):
        budget = globalopt.OptBudget(
            max_evals=per_run + (extra if r == 0 else 0),
            seed=int(child.generate_state(1)[0]),
        )
        xb, val = globalopt.maximize(objective, space.bounds[blk], budget)
        if val > best_val:
            best_block, best_val = xb, val
    return best_block


def true_regret(game: GameSpec, x: Profile, cfg: BRConfig | None = None) -> float:
    """Largest unilateral improvement any player can find at ``x``.

    Numeric: for each player, a best-response search against the others'
    coordinates; the regret is the largest payoff gain, clamped at zero
    (the searches are maximizations, so noise-free underestimates of the
    gain can dip below zero only by optimizer slack).
    """
    cfg = cfg or BRConfig()
    x = np.asarray(x, dtype=float)
    if not game.space.contains(x):
        raise ValueError("profile lies outside the action space")
    payoffs = game.payoffs(x)
    worst = 0.0
    for i in range(game.players):
        oth = game.space.other_indices(i)
        xb = best_response(game, i, x[oth], cfg)
        full = x.copy()
        full[game.space.block(i)] = xb
        worst = max(worst, game.payoffs(full)[i] - payoffs[i])
    return float(worst)


@dataclass
class BRTrajectory:
    """Iterated-best-response path with its exact-evaluation bill.

    ``costs[j]`` is the cumulative number of utility evaluations spent
    when ``profiles[j]`` was produced (0 for the start point).
    ``fe_cost`` covers the whole run, including the final round whose
    searches only confirmed the fixed point, so ``fe_cost >= costs[-1]``.
    """

    profiles: list[Profile]
    fe_cost: int
    regrets: list[float]
    costs: list[int]


def iterated_br(game: GameSpec, start: Profile, max_rounds: int = 20,
                cfg: BRConfig | None = None) -> BRTrajectory:
    """Round-robin best responses from ``start`` until a fixed point.

    Every utility evaluation spent by the inner searches counts toward
    ``fe_cost`` (the best-response searches are the method here, not an
    analysis tool).  Stops early when a full round moves no coordinate
    by more than 1e-6, or after ``max_rounds``.  Trajectory regrets are
    evaluated afterwards against the unmetered game.
    """
    if game.utilities is None:
        raise UtilitiesUnavailableError(
            f"iterated best response needs exact payoffs, which {game.name!r} lacks"
        )
    cfg = cfg or BRConfig()
    x = np.array(start, dtype=float)
    if not game.space.contains(x):
        raise ValueError("start profile lies outside the action space")

    calls = [0]

    def metered(u):
        def f(z):
            calls[0] += 1
            return u(z)
        return f

    metered_game = replace(game, utilities=tuple(metered(u) for u in game.utilities))
    profiles = [x.copy()]
    costs = [0]
    for r in range(max_rounds):
        x_new = x.copy()
        round_cfg = replace(cfg, seed=_derived_seed(cfg.seed, r))
        for i in range(game.players):
            oth = game.space.other_indices(i)
            x_new[game.space.block(i)] = best_response(metered_game, i, x_new[oth], round_cfg)
        if np.max(np.abs(x_new - x)) < 1e-6:
            break
        x = x_new
        profiles.append(x.copy())
        costs.append(calls[0])
    regrets = [true_regret(game, p, cfg) for p in profiles]
    return BRTrajectory(profiles=profiles, fe_cost=calls[0], regrets=regrets, costs=costs)


def random_baseline(game: GameSpec, total_fes: int, seed: int = 0,
                    eval_cfg: BRConfig | None = None) -> RunRecord:
    """Latin-hypercube design of ``total_fes`` profiles, no model, no search.

    The record's recommendation is the design point with the lowest
    *true* regret, and the per-row true regrets ride along so callers
    scoring the run do not pay for the best-response searches twice.
    """
    if total_fes < 1:
        raise ValueError("need at least one evaluation")
    eval_cfg = eval_cfg or BRConfig()
    ss = np.random.SeedSequence(seed)
    rng_design, rng_noise = map(np.random.default_rng, ss.spawn(2))
    profiles = game.space.from_unit(latin_hypercube(total_fes, game.space.n_joint, rng_design))
    rows = []
    regrets = []
    for j, x in enumerate(profiles):
        ob = oracle_eval(game, x, rng_noise)
        rows.append(IterationRow(iteration=j + 1, profile=ob.profile, payoffs=ob.payoffs,
                                 branch="init", regret_estimate=float("nan"), wall_ms=0.0))
        regrets.append(true_regret(game, ob.profile,
                                   replace(eval_cfg, seed=_derived_seed(seed, j))))
    rec = rows[int(np.argmin(regrets))].profile
    return RunRecord(rows=rows, recommendation=rec, oracle_calls=total_fes,
                     seed=seed, true_regrets=regrets)


def grid_solver(game: GameSpec, cfg: SolverConfig, grid_per_dim: int = 31) -> RunRecord:
    """The sequential solver with proposals restricted to a fixed lattice.

    The lattice has ``grid_per_dim`` equally spaced points per joint
    coordinate (endpoints included).  The initial design draws distinct
    lattice points, and both branches pick their lattice argmin/argmax
    exhaustively instead of running the inner optimizer.  Every evaluated
    profile is a lattice point.  Under zero noise, already-evaluated
    points are excluded from re-selection (an exact repeat would make
    the Gram matrix singular), so the budget must not exceed the lattice
    size.
    """
    if not 0.0 < cfg.epsilon < 1.0:
        raise ValueError("runs need epsilon strictly inside (0, 1)")
    if grid_per_dim < 2:
        raise ValueError("need at least two lattice points per coordinate")
    space = game.space
    n = space.n_joint
    size = grid_per_dim**n
    if size > 1_000_000:
        raise ValueError(f"lattice of {size} points exceeds the memory guard")
    if not game.noisy and cfg.total_fes > size:
        raise ValueError("noiseless budget exceeds the number of lattice points")

    axes = [np.linspace(0.0, 1.0, grid_per_dim)] * n
    mesh = np.meshgrid(*axes, indexing="ij")
    lattice = np.stack([m.ravel() for m in mesh], axis=1)
    uspace = space.as_unit()

    ss = np.random.SeedSequence(cfg.seed)
    rng_design, rng_noise, rng_select, rng_fit = map(np.random.default_rng, ss.spawn(4))

    obs = ObservationSet(allow_duplicates=game.noisy)
    rows: list[IterationRow] = []
    unit_rows: list[np.ndarray] = []
    taken = np.zeros(size, dtype=bool)

    def observe(idx: int, branch: str, estimate: float, started: float) -> None:
        u = lattice[idx]
        ob = oracle_eval(game, space.from_unit(u), rng_noise)
        obs.append(ob)
        unit_rows.append(u)
        taken[idx] = True
        rows.append(IterationRow(
            iteration=len(rows) + 1, profile=ob.profile, payoffs=ob.payoffs,
            branch=branch, regret_estimate=estimate,
            wall_ms=(time.perf_counter() - started) * 1e3,
        ))

    init = cfg.resolved_init_size()
    for idx in rng_design.choice(size, size=init, replace=False):
        observe(int(idx), "init", float("nan"), time.perf_counter())

    surrogates = None
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
        branch = choose_branch(rng_select, cfg.epsilon)
        acq_rng = None
        if cfg.acq.mode == "sampled":
            acq_rng = np.random.default_rng(int(rng_select.integers(2**31 - 1)))
        if branch == "exploit":
            vals = RegretAcquisition(surrogates, uspace, cfg.acq).value_batch(lattice, acq_rng)
            if not game.noisy:
                vals = np.where(taken, np.inf, vals)
            idx = int(np.argmin(vals))
            observe(idx, branch, float(vals[idx]), started)
        else:
            sig = np.sqrt(np.max([s.posterior_var(lattice) for s in surrogates], axis=0))
            if not game.noisy:
                sig = np.where(taken, -np.inf, sig)
            observe(int(np.argmax(sig)), branch, float("nan"), started)

    record = RunRecord(rows=rows, recommendation=rows[0].profile,
                       oracle_calls=len(rows), seed=cfg.seed, aborted=aborted)
    rec_rng = np.random.default_rng(int(rng_select.integers(2**31 - 1)))
    if not aborted:
        surrogates = _fit_all(np.array(unit_rows), obs, game.players, cfg, rng_fit)
        record.recommendation = recommend(record, surrogates, space, cfg.acq, rec_rng)
    elif surrogates is not None:
        record.recommendation = recommend(record, surrogates, space, cfg.acq, rec_rng)
    return record
