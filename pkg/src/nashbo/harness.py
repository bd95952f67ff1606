"""Experiment orchestration: multi-seed batches, convergence tables, CLI.

A batch runs one (problem, method) pair over a list of seeds, scores
every oracle call with the analysis-side true regret, and reduces the
per-seed best-so-far curves to a tidy table with per-FE aggregates.
Tables serialize to CSV (columns ``method,problem,seed,fe,best_regret``)
and render to SVG convergence plots; both emissions are byte-stable
given identical inputs.

The command-line entry point wraps this in four subcommands: ``run``
(one batch), ``suite`` (the benchmark family), ``regret`` (score one
profile), ``selftest`` (fast invariant checks).  Exit codes: 0 success,
1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import baselines, games, solver
from .acquisition import DEFAULT_GAMMA, AcquisitionConfig
from .baselines import BRConfig

METHODS = ("bn_exact", "bn_approx", "br", "random", "grid")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one batch needs; unset budget/seeds fall back per problem."""

    problem: str = "saddle1"
    method: str = "bn_exact"
    noise: bool = False
    seeds: tuple[int, ...] = ()
    total_fes: int | None = None
    epsilon: float = 0.05
    gamma: float = DEFAULT_GAMMA
    init_size: int | None = None
    acq_budget: int = 250
    fit_restarts: int = 2
    samples_per_dim: int = 10
    grid_per_dim: int | None = None
    br_inner_budget: int = 2000
    br_max_rounds: int = 20
    eval_budget: int = 2000
    shift: tuple[float, ...] | None = None
    dims_per_player: int | None = None
    out_dir: str = "out"
    workers: int | None = None

    def __post_init__(self) -> None:
        if self.problem not in games.PROBLEM_NAMES:
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")

    def resolved_seeds(self) -> tuple[int, ...]:
        if self.seeds:
            return self.seeds
        return tuple(range(1, games.DEFAULT_SEED_COUNTS.get(self.problem, 25) + 1))

    def resolved_fes(self) -> int:
        if self.total_fes is not None:
            return self.total_fes
        return games.DEFAULT_FES.get(self.problem, 40)

    def resolved_grid(self) -> int:
        if self.grid_per_dim is not None:
            return self.grid_per_dim
        # keep the lattice near the 2-D default's resolution without
        # blowing up the exhaustive acquisition scan in four dimensions
        return 31 if self.make_game().space.n_joint <= 2 else 11

    def make_game(self) -> games.GameSpec:
        return games.make_problem(self.problem, noise=self.noise, shift=self.shift,
                                  dims_per_player=self.dims_per_player)


@dataclass(frozen=True)
class ConvergenceRow:
    method: str
    problem: str
    seed: int
    fe: int
    best_regret: float


@dataclass(frozen=True)
class AggregateRow:
    method: str
    problem: str
    fe: int
    mean: float
    std: float
    median: float
    n: int


@dataclass
class ConvergenceTable:
    rows: list[ConvergenceRow] = field(default_factory=list)
    aggregates: list[AggregateRow] = field(default_factory=list)
    failures: list[tuple[int, str]] = field(default_factory=list)


def _eval_cfg(cfg: ExperimentConfig, seed: int, fe: int) -> BRConfig:
    # stable per (seed, fe) so re-runs and worker counts cannot reorder draws
    return BRConfig(inner_budget=cfg.eval_budget,
                    seed=int(np.random.SeedSequence((seed, fe)).generate_state(1)[0]))


def _solver_config(cfg: ExperimentConfig, seed: int, mode: str) -> solver.SolverConfig:
    acq = AcquisitionConfig(gamma=cfg.gamma, mode=mode,
                            samples_per_dim=cfg.samples_per_dim)
    return solver.SolverConfig(total_fes=cfg.resolved_fes(), init_size=cfg.init_size,
                               epsilon=cfg.epsilon, acq_budget=cfg.acq_budget, acq=acq,
                               fit_restarts=cfg.fit_restarts, seed=seed)


def _record_rows(cfg: ExperimentConfig, game: games.GameSpec, seed: int,
                 record: solver.RunRecord) -> list[ConvergenceRow]:
    rows = []
    best = math.inf
    for row in record.rows:
        if record.true_regrets is not None:
            regret = record.true_regrets[row.iteration - 1]
        else:
            regret = baselines.true_regret(game, row.profile,
                                           _eval_cfg(cfg, seed, row.iteration))
        best = min(best, regret)
        rows.append(ConvergenceRow(cfg.method, cfg.problem, seed, row.iteration, best))
    return rows


def _br_rows(cfg: ExperimentConfig, game: games.GameSpec, seed: int) -> list[ConvergenceRow]:
    start = solver.initial_design(game.space, 1, np.random.default_rng(seed))[0]
    traj = baselines.iterated_br(game, start, max_rounds=cfg.br_max_rounds,
                                 cfg=BRConfig(inner_budget=cfg.br_inner_budget, seed=seed))
    rows = []
    best = math.inf
    for j, (cost, regret) in enumerate(zip(traj.costs, traj.regrets)):
        best = min(best, regret)
        if j == 0 and len(traj.profiles) > 1:
            continue  # the start point costs nothing; charge from the first round
        rows.append(ConvergenceRow(cfg.method, cfg.problem, seed, max(cost, 1), best))
    return rows


def _seed_rows(cfg: ExperimentConfig, seed: int) -> list[ConvergenceRow]:
    """One seed's best-so-far convergence rows (worker entry point)."""
    game = cfg.make_game()
    if cfg.method == "bn_exact":
        record = solver.run(game, _solver_config(cfg, seed, "exact"))
    elif cfg.method == "bn_approx":
        record = solver.run(game, _solver_config(cfg, seed, "sampled"))
    elif cfg.method == "grid":
        record = baselines.grid_solver(game, _solver_config(cfg, seed, "exact"),
                                       grid_per_dim=cfg.resolved_grid())
    elif cfg.method == "random":
        record = baselines.random_baseline(game, cfg.resolved_fes(), seed,
                                           eval_cfg=BRConfig(inner_budget=cfg.eval_budget))
    elif cfg.method == "br":
        return _br_rows(cfg, game, seed)
    else:  # pragma: no cover - ExperimentConfig already validates
        raise ValueError(cfg.method)
    return _record_rows(cfg, game, seed, record)


def _aggregate(rows: list[ConvergenceRow]) -> list[AggregateRow]:
    groups: dict[tuple[str, str, int], list[float]] = {}
    for r in rows:
        groups.setdefault((r.method, r.problem, r.fe), []).append(r.best_regret)
    out = []
    for (method, problem, fe), vals in sorted(groups.items()):
        arr = np.asarray(vals)
        std = float(np.std(arr, ddof=1)) if len(arr) > 1 else 0.0
        out.append(AggregateRow(method, problem, fe, float(np.mean(arr)), std,
                                float(np.median(arr)), len(arr)))
    return out


def resolve_workers(requested: int | None) -> int:
    if requested is not None:
        return max(1, requested)
    env = os.environ.get("NASHBO_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_experiment(cfg: ExperimentConfig) -> ConvergenceTable:
    """Run every seed of one (problem, method) batch and aggregate.

    Seeds run on a process pool when more than one worker is available;
    a failed seed lands in ``failures`` without killing the batch.  Row
    order, and therefore CSV bytes, depend only on the seed list.
    """
    seeds = cfg.resolved_seeds()
    table = ConvergenceTable()
    results: dict[int, list[ConvergenceRow]] = {}
    workers = resolve_workers(cfg.workers)
    if workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {seed: pool.submit(_seed_rows, cfg, seed) for seed in seeds}
            for seed in seeds:
                try:
                    results[seed] = futures[seed].result()
                except Exception as exc:  # noqa: BLE001 - batch robustness
                    table.failures.append((seed, repr(exc)))
    else:
        for seed in seeds:
            try:
                results[seed] = _seed_rows(cfg, seed)
            except Exception as exc:  # noqa: BLE001
                table.failures.append((seed, repr(exc)))
    for seed in seeds:
        table.rows.extend(results.get(seed, []))
    table.aggregates = _aggregate(table.rows)
    return table


def merge_tables(tables: list[ConvergenceTable]) -> ConvergenceTable:
    merged = ConvergenceTable()
    for t in tables:
        merged.rows.extend(t.rows)
        merged.failures.extend(t.failures)
    merged.aggregates = _aggregate(merged.rows)
    return merged


def emit_csv(table: ConvergenceTable, path: str) -> None:
    """Write the per-seed rows; floats as shortest round-trip reprs."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "problem", "seed", "fe", "best_regret"])
        for r in table.rows:
            writer.writerow([r.method, r.problem, r.seed, r.fe, repr(r.best_regret)])


_PLOT_FLOOR = 1e-12  # regret can be exactly 0; keep the log axis finite


def emit_plot(table: ConvergenceTable, path: str, title: str = "") -> None:
    """Render median convergence lines with mean +- std bands to SVG.

    Byte-stable across identical tables: fixed hash salt, no embedded
    creation date.
    """
    import matplotlib
    from matplotlib.backends.backend_svg import FigureCanvasSVG
    from matplotlib.figure import Figure

    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    methods = sorted({a.method for a in table.aggregates})
    with matplotlib.rc_context({"svg.hashsalt": "nashbo"}):
        fig = Figure(figsize=(6.4, 4.2))
        FigureCanvasSVG(fig)
        ax = fig.subplots()
        for method in methods:
            agg = sorted((a for a in table.aggregates if a.method == method),
                         key=lambda a: a.fe)
            fes = [a.fe for a in agg]
            med = [max(a.median, _PLOT_FLOOR) for a in agg]
            lo = [max(a.mean - a.std, _PLOT_FLOOR) for a in agg]
            hi = [max(a.mean + a.std, _PLOT_FLOOR) for a in agg]
            line, = ax.plot(fes, med, label=method)
            ax.fill_between(fes, lo, hi, alpha=0.2, color=line.get_color())
        ax.set_yscale("log")
        ax.set_xlabel("function evaluations")
        ax.set_ylabel("best-so-far true regret")
        if title:
            ax.set_title(title)
        if methods:
            ax.legend()
        fig.savefig(path, format="svg", metadata={"Date": None})


# --- self test ----------------------------------------------------------------

def selftest() -> int:
    """Fast standalone invariant checks; 0 on success, 1 on first failure."""
    from scipy import integrate

    from . import acquisition, globalopt, gp
    from .sampling import latin_hypercube

    def check(name: str, ok: bool, detail: str = "") -> bool:
        print(f"{'ok' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else ""))
        return ok

    rng = np.random.default_rng(7)
    try:
        params = gp.KernelParams(v=0.04, c=1.3, d=np.array([3.0, 0.7]))
        x = np.array([0.2, 0.9])
        x2 = np.array([0.5, 0.1])
        want = 1.3 * math.exp(-0.5 * (3.0 * 0.09 + 0.7 * 0.64))
        if not check("kernel smooth part", abs(gp.kernel_eval(params, x, x2) - want) < 1e-12):
            return 1
        if not check("kernel white indicator",
                     gp.kernel_eval(params, x, x) == 0.04 + 1.3):
            return 1

        X = rng.uniform(size=(9, 2))
        y = np.sin(3 * X[:, 0]) + X[:, 1]
        s = gp.PlayerSurrogate.from_data(params, X, y)
        mu = np.array([s.posterior_mean(row) for row in X])
        if not check("posterior tracks its own training data",
                     np.all(np.abs(mu - y) < 0.05) and s.posterior_var(X[0]) >= 0):
            return 1

        space = games.ActionSpace.unit((1, 1))
        bm = acquisition.bar_mu_exact(s, space, 0, np.array([0.4, 0.6]))
        quad, _ = integrate.quad(
            lambda u: s.posterior_mean(np.array([u, 0.6])), 0.0, 1.0, limit=200)
        if not check("block average matches quadrature", abs(bm - quad) < 1e-9,
                     f"{bm:.12f} vs {quad:.12f}"):
            return 1

        xs, val = globalopt.minimize(lambda z: float(np.sum((z - 0.3) ** 2)),
                                     np.tile([0.0, 1.0], (2, 1)),
                                     globalopt.OptBudget(max_evals=300, seed=1))
        if not check("global optimizer finds a sphere minimum", val < 1e-4,
                     f"value {val:.3g}"):
            return 1

        pts = latin_hypercube(16, 2, rng)
        strata = np.floor(pts * 16).astype(int)
        if not check("latin hypercube stratifies both margins",
                     all(len(set(strata[:, j])) == 16 for j in range(2))):
            return 1

        draws = sum(solver.choose_branch(rng, 0.05) == "explore" for _ in range(4000))
        if not check("branch frequency near epsilon", abs(draws / 4000 - 0.05) < 0.02,
                     f"{draws / 4000:.4f}"):
            return 1

        game = games.make_problem("saddle1")
        cfgs = solver.SolverConfig(total_fes=8, epsilon=0.05, acq_budget=40, seed=3)
        rec1 = solver.run(game, cfgs)
        rec2 = solver.run(game, cfgs)
        same = all(np.array_equal(a.profile, b.profile)
                   for a, b in zip(rec1.rows, rec2.rows))
        if not check("solver runs reproduce bit for bit",
                     same and rec1.oracle_calls == 8 and not rec1.aborted):
            return 1
    except Exception as exc:  # noqa: BLE001 - report and fail
        print(f"FAIL  unexpected error: {exc!r}")
        return 1
    return 0


# --- command line -------------------------------------------------------------

_CONFIG_KEYS = {
    "problem", "method", "noise", "seeds", "fes", "epsilon", "gamma", "init_size",
    "acq_budget", "fit_restarts", "samples_per_dim", "grid_per_dim",
    "br_inner_budget", "br_max_rounds", "eval_budget", "shift", "dims_per_player",
    "out", "workers",
}


def parse_seed_list(text: str) -> tuple[int, ...]:
    """Accept "7", "1,2,9" or the inclusive range form "1..25"."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        start, stop = int(lo), int(hi)
        if stop < start:
            raise ValueError(f"empty seed range {text!r}")
        return tuple(range(start, stop + 1))
    return tuple(int(part) for part in text.split(",") if part.strip())


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("on", "true", "1", "yes"):
        return True
    if low in ("off", "false", "0", "no"):
        return False
    raise ValueError(f"expected on/off, got {text!r}")


def read_config_file(path: str) -> dict[str, str]:
    """Flat ``key = value`` lines; '#' comments and blank lines ignored."""
    values: dict[str, str] = {}
    with open(path) as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{ln}: expected key = value")
            key, val = (part.strip() for part in line.split("=", 1))
            if key not in _CONFIG_KEYS:
                raise ValueError(f"{path}:{ln}: unknown key {key!r}")
            values[key] = val
    return values


def _config_from_sources(args: argparse.Namespace) -> ExperimentConfig:
    """Defaults, overridden by the config file, overridden by explicit flags."""
    kw: dict = {}
    if getattr(args, "config", None):
        raw = read_config_file(args.config)
        if "problem" in raw:
            kw["problem"] = raw["problem"]
        if "method" in raw:
            kw["method"] = raw["method"]
        if "noise" in raw:
            kw["noise"] = _parse_bool(raw["noise"])
        if "seeds" in raw:
            kw["seeds"] = parse_seed_list(raw["seeds"])
        if "fes" in raw:
            kw["total_fes"] = int(raw["fes"])
        if "shift" in raw:
            kw["shift"] = tuple(float(v) for v in raw["shift"].split(","))
        if "out" in raw:
            kw["out_dir"] = raw["out"]
        for key, cast in (("epsilon", float), ("gamma", float), ("init_size", int),
                          ("acq_budget", int), ("fit_restarts", int),
                          ("samples_per_dim", int), ("grid_per_dim", int),
                          ("br_inner_budget", int), ("br_max_rounds", int),
                          ("eval_budget", int), ("dims_per_player", int),
                          ("workers", int)):
            if key in raw:
                kw[key] = cast(raw[key])
    for flag, key in (("problem", "problem"), ("method", "method"), ("noise", "noise"),
                      ("fes", "total_fes"), ("epsilon", "epsilon"), ("gamma", "gamma"),
                      ("init_size", "init_size"), ("acq_budget", "acq_budget"),
                      ("grid_per_dim", "grid_per_dim"), ("workers", "workers"),
                      ("out", "out_dir")):
        val = getattr(args, flag, None)
        if val is not None and not (flag == "noise" and val is False):
            kw[key] = val
    if getattr(args, "seeds", None):
        kw["seeds"] = parse_seed_list(args.seeds)
    valid = {f.name for f in fields(ExperimentConfig)}
    assert set(kw) <= valid
    return ExperimentConfig(**kw)


def _out_paths(cfg: ExperimentConfig, combined: bool = False) -> tuple[str, str]:
    stem = cfg.problem + ("_noise" if cfg.noise else "")
    if not combined:
        stem += f"_{cfg.method}"
    base = os.path.join(cfg.out_dir, stem)
    return base + ".csv", base + ".svg"


def _print_summary(table: ConvergenceTable, fh=None) -> None:
    fh = fh or sys.stdout
    last_fe: dict[str, AggregateRow] = {}
    for agg in table.aggregates:
        cur = last_fe.get(agg.method)
        if cur is None or agg.fe > cur.fe:
            last_fe[agg.method] = agg
    for method in sorted(last_fe):
        a = last_fe[method]
        print(f"{a.problem} {method} fe={a.fe} n={a.n} "
              f"median={a.median:.6g} mean={a.mean:.6g} std={a.std:.6g}", file=fh)
    for seed, message in table.failures:
        print(f"warning: seed {seed} failed: {message}", file=sys.stderr)


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _config_from_sources(args)
    table = run_experiment(cfg)
    if not table.rows:
        print("error: every seed failed", file=sys.stderr)
        for seed, message in table.failures:
            print(f"  seed {seed}: {message}", file=sys.stderr)
        return 1
    csv_path, svg_path = _out_paths(cfg)
    emit_csv(table, csv_path)
    emit_plot(table, svg_path, title=cfg.problem + (" (noisy)" if cfg.noise else ""))
    _print_summary(table)
    print(f"wrote {csv_path} and {svg_path}")
    return 0


_SUITE_METHODS = ("bn_exact", "bn_approx", "random", "grid", "br")


def _cmd_suite(args: argparse.Namespace) -> int:
    base = _config_from_sources(args)
    any_rows = False
    for problem in ("saddle1", "saddle2", "saddle3", "mop"):
        for noise in (False, True):
            if problem == "mop":
                print(f"skip: {problem} has no payoff functions registered")
                break
            tables = []
            for method in _SUITE_METHODS:
                if method == "br" and noise:
                    print(f"skip: br needs exact payoffs, {problem} noisy run")
                    continue
                cfg = replace(base, problem=problem, method=method, noise=noise)
                print(f"running {problem} {method} noise={'on' if noise else 'off'} "
                      f"fes={cfg.resolved_fes()} seeds={len(cfg.resolved_seeds())}")
                tables.append(run_experiment(cfg))
            merged = merge_tables(tables)
            if not merged.rows:
                print(f"error: every run of {problem} failed", file=sys.stderr)
                return 1
            any_rows = True
            cfg = replace(base, problem=problem, noise=noise)
            csv_path, svg_path = _out_paths(cfg, combined=True)
            emit_csv(merged, csv_path)
            emit_plot(merged, svg_path, title=problem + (" (noisy)" if noise else ""))
            _print_summary(merged)
            print(f"wrote {csv_path} and {svg_path}")
    return 0 if any_rows else 1


def _cmd_regret(args: argparse.Namespace) -> int:
    try:
        profile = np.array([float(v) for v in args.profile.split(",")], dtype=float)
    except ValueError:
        print(f"error: malformed profile {args.profile!r}", file=sys.stderr)
        return 2
    game = games.make_problem(args.problem)
    if not game.space.contains(profile):
        print("error: profile has the wrong length or leaves the action space",
              file=sys.stderr)
        return 2
    value = baselines.true_regret(game, profile,
                                  BRConfig(inner_budget=args.eval_budget, seed=0))
    print(f"{value:.6g}")
    return 0


def cli_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="nashbo",
        description="Bayesian-optimization search for approximate Nash equilibria",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_shared(p: argparse.ArgumentParser, with_method: bool = True) -> None:
        if with_method:
            p.add_argument("--problem", choices=games.PROBLEM_NAMES)
            p.add_argument("--method", choices=METHODS)
        p.add_argument("--seeds", help='e.g. "7", "1,2,9" or "1..25"')
        p.add_argument("--fes", type=int, help="oracle budget per run")
        p.add_argument("--noise", action="store_true", default=None,
                       help="turn on the problem's observation noise")
        p.add_argument("--epsilon", type=float, help="exploration probability")
        p.add_argument("--gamma", type=float, help="acquisition optimism quantile")
        p.add_argument("--init-size", dest="init_size", type=int)
        p.add_argument("--acq-budget", dest="acq_budget", type=int)
        p.add_argument("--grid-per-dim", dest="grid_per_dim", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--out", help="output directory (default: out)")
        p.add_argument("--config", help="flat key = value config file")

    run_p = sub.add_parser("run", help="one (problem, method) batch")
    add_shared(run_p)
    run_p.set_defaults(fn=_cmd_run)

    suite_p = sub.add_parser("suite", help="benchmark family, all methods")
    add_shared(suite_p, with_method=False)
    suite_p.set_defaults(fn=_cmd_suite)

    regret_p = sub.add_parser("regret", help="true regret of one profile")
    regret_p.add_argument("--problem", choices=games.PROBLEM_NAMES, required=True)
    regret_p.add_argument("--profile", required=True,
                          help="comma-separated joint coordinates")
    regret_p.add_argument("--eval-budget", dest="eval_budget", type=int, default=2000)
    regret_p.set_defaults(fn=_cmd_regret)

    selftest_p = sub.add_parser("selftest", help="fast invariant checks")
    selftest_p.set_defaults(fn=lambda args: selftest())

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except ValueError as exc:
        # bad flag, config-file or profile values are usage errors
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - anything else is a runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))
