"""Swarm configurations and the GA, with and without the LOC table.

Swarm testing switches off each action class with probability 0.5 per test.
If that leaves a class without anything to fill the pools it needs, the
producers are switched back on.  The GA breeds tests from a population
ranked by the coverage each test reached.
"""

from __future__ import annotations

import random

from locbias.bench import get_harness
from locbias.locmap import loc_distribution, sample_loc
from locbias.runner import Budget, run_trial
from locbias.strategies import GA, GA_LOC, SWARM, SWARM_LOC, StrategyConfig, compose_loc, swarm_config

harness = get_harness("sortedlist")
rng = random.Random(4)
for _ in range(3):
    cfg = swarm_config(harness, rng)
    print(f"drawn {sorted(cfg.drawn)}")
    print(f"  after closure {sorted(cfg.enabled)}")

table = loc_distribution(sample_loc(harness, 5000, seed=0))
assert compose_loc(SWARM, table) == StrategyConfig(SWARM_LOC, table=table)

for cfg in (StrategyConfig(SWARM), StrategyConfig(SWARM_LOC, table=table),
            StrategyConfig(GA), StrategyConfig(GA_LOC, table=table)):
    r = run_trial(harness, cfg, Budget.actions(5000), seed=0)
    print(f"{cfg.id:<10} branches {r.branches:>3}  statements {r.statements:>3}  tests {r.tests}")
