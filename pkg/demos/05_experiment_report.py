#!/usr/bin/env python3
"""Head-to-head comparison of the optimizing methods on seeded trials.

Every method is trained once, then evaluated greedily on the same 100
redrawn scenarios (user CPU frequencies and distances resampled per
trial).  The joint agent plus convex allocation should come out on top,
the grid-resource agent next, and the fixed-model baselines last; the
report files land in ./out-demo/<method>/.
"""

import time

from fedkd import default_scenario
from fedkd.experiment import (
    EXPERIMENT_QCONFIG,
    ExperimentConfig,
    emit_report,
    run_experiment,
)

TRIALS = 100
SEED = 7

reports = {}
for method in ("proposed", "q-only", "fl-min", "fl-max"):
    t0 = time.perf_counter()
    cfg = ExperimentConfig(scenario=default_scenario(), method=method, seed=SEED,
                           trials=TRIALS, q=EXPERIMENT_QCONFIG)
    rep = run_experiment(cfg)
    reports[method] = rep
    emit_report(rep, f"out-demo/{method}")
    print(f"ran {method} in {time.perf_counter() - t0:.1f}s")

names = reports["proposed"].model_names
print(f"\n{'metric':<22}" + "".join(f"{m:>12}" for m in reports))
rows = [
    ("objective (mean)", lambda r: f"{r.mean('objective'):.4f}"),
    ("avg delay (s)", lambda r: f"{r.mean('avg_delay_s'):.2f}"),
    ("own accuracy", lambda r: f"{r.mean('acc_own'):.4f}"),
    ("average accuracy", lambda r: f"{r.mean('acc_avg'):.4f}"),
]
for label, fn in rows:
    print(f"{label:<22}" + "".join(f"{fn(r):>12}" for r in reports.values()))
for i, name in enumerate(names):
    print(f"{'share ' + name:<22}"
          + "".join(f"{r.model_frequencies()[i]:>12.3f}" for r in reports.values()))

best = min(reports, key=lambda m: reports[m].mean("objective"))
print(f"\nbest mean objective: {best}")
print("per-method trial files: out-demo/<method>/trials.csv and summary.json")
