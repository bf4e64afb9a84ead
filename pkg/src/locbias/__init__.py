"""LOC-biased random test generation for stateful APIs.

Action classes whose executions enter more source lines are chosen more
often: zero-LOC classes share a fixed 20% of the selection mass and the rest
is split in proportion to each class's measured mean LOC.  The package holds
the harness model, LOC estimation, six selection strategies, a budgeted
runner with coverage probes, rank statistics, experiment reports and a small
benchmark suite.
"""

from __future__ import annotations

from .coverage import CoverageSnapshot, ProbeRegistry
from .harness import (
    ActionClassSpec,
    FaultSignature,
    Harness,
    HarnessState,
    PoolSpec,
    Property,
    StepOutcome,
    TestCase,
    TestStep,
    format_testcase,
    parse_testcase,
)
from .locmap import LocMap, ProbabilityTable, load_locmap, loc_distribution, sample_loc, save_locmap, static_loc
from .runner import Budget, TrialResult, measure_overhead, run_trial
from .stats import mann_whitney, wilcoxon
from .strategies import StrategyConfig, compose_loc, pick_class, swarm_config

__version__ = "0.1.0"

__all__ = [
    "ActionClassSpec",
    "Budget",
    "CoverageSnapshot",
    "FaultSignature",
    "Harness",
    "HarnessState",
    "LocMap",
    "PoolSpec",
    "ProbabilityTable",
    "ProbeRegistry",
    "Property",
    "StepOutcome",
    "StrategyConfig",
    "TestCase",
    "TestStep",
    "TrialResult",
    "compose_loc",
    "format_testcase",
    "load_locmap",
    "loc_distribution",
    "mann_whitney",
    "measure_overhead",
    "parse_testcase",
    "pick_class",
    "run_trial",
    "sample_loc",
    "save_locmap",
    "static_loc",
    "swarm_config",
    "wilcoxon",
]
