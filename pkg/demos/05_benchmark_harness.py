"""Multi-seed benchmarking with CSV tables and convergence plots.

A batch runs one (problem, method) pair over a seed list, scores every
oracle call with the true regret, and reduces the per-seed best-so-far
curves to aggregates.  Emissions are byte-stable: the same seeds always
produce the same CSV and SVG, which makes regressions diffable.

The same machinery drives the command line:

    nashbo run --problem saddle1 --method bn_exact --seeds 1..25
    nashbo suite --out results/
"""

import os

from nashbo.harness import (
    ExperimentConfig,
    emit_csv,
    emit_plot,
    merge_tables,
    run_experiment,
)

out = "demo_out"
seeds = (1, 2, 3, 4, 5)

tables = []
for method in ("bn_exact", "random"):
    cfg = ExperimentConfig(problem="saddle1", method=method, seeds=seeds,
                           total_fes=20, eval_budget=400, workers=1)
    print(f"running {cfg.problem} {method} over {len(seeds)} seeds ...")
    tables.append(run_experiment(cfg))

merged = merge_tables(tables)
print(f"\n{len(merged.rows)} convergence rows, {len(merged.aggregates)} aggregates")
print("final-budget aggregates:")
for agg in merged.aggregates:
    if agg.fe == 20:
        print(f"  {agg.method:9s} median {agg.median:.3e}  "
              f"mean {agg.mean:.3e} +- {agg.std:.3e}  (n={agg.n})")

os.makedirs(out, exist_ok=True)
emit_csv(merged, os.path.join(out, "saddle1_demo.csv"))
emit_plot(merged, os.path.join(out, "saddle1_demo.svg"), title="saddle1, 20 FEs")
print(f"\nwrote {out}/saddle1_demo.csv and {out}/saddle1_demo.svg")
