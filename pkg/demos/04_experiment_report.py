"""A small experiment: several strategies over shared seeds, then a report.

Gains are percent changes of the mean against the baseline.  The markdown
report prints significant differences (p < 0.05) in bold and the rest in
italics.
"""

from __future__ import annotations

import tempfile

from locbias.bench import get_harness
from locbias.experiments import ExperimentConfig, markdown_report, run_experiment, write_report
from locbias.locmap import loc_distribution, sample_loc
from locbias.runner import Budget
from locbias.strategies import LOC, RANDOM, SWARM, StrategyConfig

faults = {"sift": True}
table = loc_distribution(sample_loc(get_harness("heap", faults), 10_000, seed=0))
config = ExperimentConfig(
    harness_id="heap",
    strategies=(StrategyConfig(RANDOM), StrategyConfig(LOC, table=table), StrategyConfig(SWARM)),
    trials=20,
    budget=Budget.actions(3000),
    faults=faults,
    paired=True,
    equal_budget=True,
    equal_budget_runs=10,
)
report = run_experiment(config)
print(markdown_report(report))

# the same report as files: summary.csv, trials.csv and report.md
with tempfile.TemporaryDirectory() as out:
    for path in write_report(report, out):
        print(path.name, len(path.read_text().splitlines()), "lines")
