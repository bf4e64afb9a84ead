"""Estimate a LOC map by random sampling, then run LOC-biased trials.

The AVL harness ships with a seeded rotation fault.  A LOC-biased run
spends more of its budget on insert and delete, which is where the fault
lives, so it tends to find the bug on more seeds than uniform random.
"""

from __future__ import annotations

from locbias.bench import all_faults_on
from locbias.locmap import loc_distribution, sample_loc
from locbias.runner import Budget, run_trial
from locbias.strategies import LOC, RANDOM, StrategyConfig

harness = all_faults_on("avl")

# sampling runs uniform random tests and records the LOC entered per step
locmap = sample_loc(harness, 10_000, seed=0)
table = loc_distribution(locmap)
print(f"{'class':<12} {'mean LOC':>9} {'prob':>7}")
for cid in locmap.class_ids:
    print(f"{cid:<12} {locmap.mean(cid):>9.2f} {table[cid]:>7.3f}")

# the same seeds for both strategies, so trial i is a paired comparison
strategies = {"random": StrategyConfig(RANDOM), "loc": StrategyConfig(LOC, table=table)}
seeds = range(20)
for name, cfg in strategies.items():
    found = sum(run_trial(harness, cfg, Budget.actions(10_000), seed=s, coverage_on=False).detected for s in seeds)
    print(f"{name:<7} found the fault in {found}/{len(seeds)} trials")

# a single trial keeps one failing test per fault signature
result = run_trial(harness, strategies["loc"], Budget.actions(10_000), seed=1)
for sig, test in result.failing_tests:
    print(sig, f"after {len(test.steps)} steps")
