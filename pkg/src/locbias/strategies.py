"""Action-selection strategies: random, LOC, swarm, GA, and the LOC compositions.

Every strategy picks a class through :func:`pick_class`; the plain variants
pass a uniform table, the ``-loc`` variants the LOC-biased one.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .harness import DEFAULT_MAX_LENGTH, Harness, HarnessError, TestStep
from .locmap import ProbabilityTable, uniform_table

RANDOM = "random"
LOC = "loc"
SWARM = "swarm"
GA = "ga"
SWARM_LOC = "swarm-loc"
GA_LOC = "ga-loc"
KINDS = (RANDOM, LOC, SWARM, GA, SWARM_LOC, GA_LOC)
LOC_KINDS = (LOC, SWARM_LOC, GA_LOC)
_BASE = {LOC: RANDOM, SWARM_LOC: SWARM, GA_LOC: GA}
_COMPOSED = {v: k for k, v in _BASE.items()}

FRESH = "fresh"
MUTATE = "mutate"
CROSSOVER = "crossover"
EXTEND = "extend"


class StrategyError(ValueError):
    pass


@dataclass(frozen=True)
class GaParams:
    population_cap: int = 50
    fresh_prob: float = 0.2
    elite_k: int = 10
    op_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)  # mutate, crossover, extend

    def __post_init__(self):
        if not 0 <= self.fresh_prob <= 1:
            raise StrategyError("fresh_prob must be a probability")
        if self.population_cap < 1 or self.elite_k < 1:
            raise StrategyError("population_cap and elite_k must be positive")
        if len(self.op_weights) != 3 or min(self.op_weights) < 0 or sum(self.op_weights) <= 0:
            raise StrategyError("op_weights needs three non-negative weights")


@dataclass(frozen=True)
class StrategyConfig:
    kind: str = RANDOM
    table: ProbabilityTable | None = None
    swarm_disable_prob: float = 0.5
    swarm_force_parents: bool = True
    ga: GaParams = field(default_factory=GaParams)
    name: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise StrategyError(f"unknown strategy {self.kind!r}")
        if self.kind in LOC_KINDS and self.table is None:
            raise StrategyError(f"{self.kind} needs a probability table")
        if not 0 <= self.swarm_disable_prob <= 1:
            raise StrategyError("swarm_disable_prob must be a probability")

    @property
    def id(self) -> str:
        return self.name or self.kind

    @property
    def plan_based(self) -> bool:
        return self.kind in (GA, GA_LOC)

    @property
    def swarm(self) -> bool:
        return self.kind in (SWARM, SWARM_LOC)


def compose_loc(base: StrategyConfig | str, table: ProbabilityTable) -> StrategyConfig:
    """LOC-biased version of ``base``; everything but the class table is kept."""
    if isinstance(base, str):
        base = StrategyConfig(base if base not in _BASE else _BASE[base], table=None)
    kind = _COMPOSED.get(base.kind, base.kind)
    if kind not in LOC_KINDS:
        raise StrategyError(f"cannot compose {base.kind!r} with LOC")
    name = None if base.name is None else f"{base.name}-loc"
    return replace(base, kind=kind, table=table, name=name)


def pick_class(table: ProbabilityTable, enabled: Iterable[str], rng: random.Random) -> str:
    """Sample from ``table`` restricted to ``enabled``.

    One uniform draw, inverse-transformed over the renormalized weights in
    ascending class-id order.
    """
    ids = sorted(enabled)
    if not ids:
        raise StrategyError("no enabled class to pick from")
    probs = table.probs
    try:
        weights = [probs[c] for c in ids]
    except KeyError as exc:
        raise StrategyError(f"class {exc.args[0]!r} missing from probability table") from None
    total = sum(weights)
    u = rng.random()
    if total <= 0:
        return ids[min(int(u * len(ids)), len(ids) - 1)]
    target = u * total
    acc = 0.0
    for cid, w in zip(ids, weights):
        acc += w
        if target < acc:
            return cid
    # rounding can leave target == total; fall back to the last positive class
    for cid, w in zip(reversed(ids), reversed(weights)):
        if w > 0:
            return cid
    return ids[-1]  # pragma: no cover


def restricted(table: ProbabilityTable, enabled: Iterable[str]) -> dict[str, float]:
    """Renormalized probabilities over ``enabled``."""
    ids = sorted(enabled)
    total = sum(table.probs[c] for c in ids)
    return {c: table.probs[c] / total for c in ids}


# -- swarm --------------------------------------------------------------------


@dataclass(frozen=True)
class SwarmConfig:
    enabled: frozenset[str]
    drawn: frozenset[str] = frozenset()  # before dependency closure
    attempts: int = 1


def dependency_closure(enabled: Iterable[str], graph: dict[str, frozenset[str]]) -> frozenset[str]:
    out = set(enabled)
    stack = list(out)
    while stack:
        cid = stack.pop()
        for dep in graph.get(cid, ()):
            if dep not in out:
                out.add(dep)
                stack.append(dep)
    return frozenset(out)


def swarm_config(
    harness: Harness,
    rng: random.Random,
    disable_prob: float = 0.5,
    force_parents: bool = True,
    max_attempts: int = 1000,
) -> SwarmConfig:
    """Draw one per-test configuration, disabling each class with ``disable_prob``.

    With ``force_parents`` the sole producers of every enabled class's inputs
    are switched back on.  Configurations that can never reach a SUT call are
    redrawn.
    """
    graph = harness.dependency_graph()
    for attempt in range(1, max_attempts + 1):
        drawn = frozenset(c for c in harness.class_ids if rng.random() >= disable_prob)
        enabled = dependency_closure(drawn, graph) if force_parents else drawn
        if enabled and harness.viable(enabled):
            return SwarmConfig(enabled, drawn, attempt)
    raise HarnessError(f"no viable swarm configuration for {harness.id!r} in {max_attempts} draws")


# -- GA -----------------------------------------------------------------------


@dataclass
class GaMember:
    steps: tuple[TestStep, ...]
    fitness: int
    born: int


@dataclass
class GaPopulation:
    members: list[GaMember] = field(default_factory=list)
    births: int = 0

    def __len__(self) -> int:
        return len(self.members)

    def elites(self, k: int) -> list[GaMember]:
        """Top ``k`` members with positive fitness (newer first on ties)."""
        ranked = sorted((m for m in self.members if m.fitness > 0), key=lambda m: (-m.fitness, -m.born))
        return ranked[:k]


@dataclass(frozen=True)
class GaPlan:
    """Steps to replay, then fresh generation up to ``length`` steps."""

    prefix: tuple[TestStep, ...]
    length: int
    origin: str


def crossover(p1: Sequence[TestStep], p2: Sequence[TestStep], cut1: int, cut2: int) -> tuple:
    return tuple(p1[:cut1]) + tuple(p2[cut2:])


def ga_propose(
    pop: GaPopulation, rng: random.Random, params: GaParams = GaParams(), max_length: int = DEFAULT_MAX_LENGTH
) -> GaPlan:
    """Choose how the next test is built.

    Fresh-generated parts of the plan (the whole test, a mutation suffix, or
    an extension) are filled in at execution time by the strategy's class
    picker, which is where LOC bias enters for ``ga-loc``.
    """
    u = rng.random()
    elites = pop.elites(params.elite_k)
    if u < params.fresh_prob or not elites:
        return GaPlan((), max_length, FRESH)
    op = rng.choices((MUTATE, CROSSOVER, EXTEND), weights=params.op_weights)[0]
    parent = elites[rng.randrange(len(elites))].steps
    if op == MUTATE:
        if not parent:
            return GaPlan((), max_length, FRESH)
        pos = rng.randrange(len(parent))
        return GaPlan(parent[:pos], len(parent), MUTATE)
    if op == CROSSOVER:
        other = elites[rng.randrange(len(elites))].steps
        child = crossover(parent, other, rng.randint(0, len(parent)), rng.randint(0, len(other)))
        child = child[:max_length]
        return GaPlan(child, max(len(child), 1), CROSSOVER)
    return GaPlan(parent[:max_length], max_length, EXTEND)


def ga_update(pop: GaPopulation, steps: Sequence[TestStep], fitness: int, params: GaParams = GaParams()) -> GaPopulation:
    """Insert an executed test; evict the weakest (oldest on ties) when over capacity."""
    if fitness < 0:
        raise StrategyError("fitness must be non-negative")
    pop.members.append(GaMember(tuple(steps), fitness, pop.births))
    pop.births += 1
    while len(pop.members) > params.population_cap:
        worst = min(pop.members, key=lambda m: (m.fitness, m.born))
        pop.members.remove(worst)
    return pop


# -- runtime strategy objects -------------------------------------------------


class Strategy:
    """Per-trial strategy state driven by the runner."""

    def __init__(self, config: StrategyConfig, harness: Harness):
        self.config = config
        self.harness = harness
        self.table = config.table if config.table is not None else uniform_table(harness.class_ids)
        missing = set(harness.class_ids) - set(self.table.probs)
        if missing:
            raise StrategyError(f"probability table lacks classes: {', '.join(sorted(missing))}")
        self.allowed: frozenset[str] | None = None
        self.population = GaPopulation() if config.plan_based else None
        self.swarm: SwarmConfig | None = None

    def begin_test(self, rng: random.Random, max_length: int = DEFAULT_MAX_LENGTH) -> GaPlan | None:
        if self.config.swarm:
            self.swarm = swarm_config(
                self.harness, rng, self.config.swarm_disable_prob, self.config.swarm_force_parents
            )
            self.allowed = self.swarm.enabled
        if self.population is not None:
            return ga_propose(self.population, rng, self.config.ga, max_length)
        return None

    def choose(self, enabled: Sequence[str], rng: random.Random) -> str:
        return pick_class(self.table, enabled, rng)

    def end_test(self, steps: Sequence[TestStep], fitness: int, failed: bool) -> None:
        # failing tests are not bred from: their fault is already recorded
        if self.population is not None and not failed:
            ga_update(self.population, steps, fitness, self.config.ga)
