"""Harness model: pools, action classes, properties, and step execution."""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator, NamedTuple, Sequence

from . import tracing

VALUE_INIT = "value-init"
SUT_CALL = "sut-call"
#: builds a pool value from other pool values without calling SUT code
VALUE_COMPOSE = "value-compose"
KINDS = (VALUE_INIT, SUT_CALL, VALUE_COMPOSE)

OK = "ok"
PROPERTY_VIOLATION = "property-violation"
SUT_ERROR = "sut-error"

DEFAULT_MAX_LENGTH = 100


class HarnessError(Exception):
    pass


class StepNotEnabled(HarnessError):
    pass


class PoisonedState(HarnessError):
    pass


class UnknownActionClass(HarnessError):
    pass


class _Empty:
    __slots__ = ()

    def __repr__(self) -> str:
        return "<empty>"

    # a singleton, so copied or pickled states still compare slots with ``is``
    def __copy__(self):
        return self

    def __deepcopy__(self, memo):
        return self

    def __reduce__(self):
        return "EMPTY"


EMPTY = _Empty()


@dataclass(frozen=True)
class PoolSpec:
    name: str
    capacity: int

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError(f"pool {self.name!r}: capacity must be >= 1")


@dataclass(frozen=True)
class ActionClassSpec:
    """One family of actions.

    ``executor`` receives the consumed pool values positionally (for
    value-init classes, the chosen domain value) and its return value is
    written to the produced slot, if any.  ``guard`` filters consumed-value
    combinations; a class whose every combination is rejected is disabled.
    """

    id: str
    kind: str
    executor: Callable[..., Any] | None = None
    consumes: tuple[str, ...] = ()
    produces: str | None = None
    domain: tuple = ()
    guard: Callable[..., bool] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"class {self.id!r}: unknown kind {self.kind!r}")
        object.__setattr__(self, "consumes", tuple(self.consumes))
        object.__setattr__(self, "domain", tuple(self.domain))
        if self.kind == VALUE_INIT:
            if self.consumes:
                raise ValueError(f"value-init class {self.id!r} cannot consume pools")
            if not self.domain:
                raise ValueError(f"value-init class {self.id!r} needs a value domain")
            if self.produces is None:
                raise ValueError(f"value-init class {self.id!r} must produce a pool")
        elif self.executor is None:
            raise ValueError(f"class {self.id!r} needs an executor")

    @property
    def arity(self) -> int:
        """Number of slot indices in a resolved step."""
        return len(self.consumes) + (1 if self.produces else 0)


@dataclass(frozen=True)
class Property:
    """Predicate over the whole state; fails by raising (AssertionError or other)."""

    id: str
    check: Callable[[HarnessState], Any]


@dataclass(frozen=True, order=True)
class FaultSignature:
    property_id: str
    category: str

    def __str__(self) -> str:
        return f"{self.property_id}/{self.category}"

    @classmethod
    def parse(cls, text: str) -> FaultSignature:
        prop, sep, cat = text.strip().partition("/")
        if not sep:
            raise ValueError(f"malformed signature {text!r}")
        return cls(prop, cat)


@dataclass(frozen=True)
class TestStep:
    class_id: str
    slots: tuple[int, ...] = ()
    value: int | None = None

    __test__ = False  # not a pytest class


@dataclass(frozen=True)
class TestCase:
    seed: int
    steps: tuple[TestStep, ...] = ()

    __test__ = False

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class StepOutcome:
    status: str
    signature: FaultSignature | None = None
    entered: frozenset[tuple[str, int]] = frozenset()

    @property
    def ok(self) -> bool:
        return self.status == OK

    @property
    def loc(self) -> int:
        """Summed LOC of the distinct functions entered by the step."""
        return sum(loc for _, loc in self.entered)


class HarnessState:
    __slots__ = ("slots", "filled", "sut", "step_count", "poisoned")

    def __init__(self, pools: Iterable[PoolSpec], sut: Any = None):
        pools = list(pools)
        self.slots: dict[str, list] = {p.name: [EMPTY] * p.capacity for p in pools}
        self.filled: dict[str, list[int]] = {p.name: [] for p in pools}
        self.sut = sut
        self.step_count = 0
        self.poisoned = False

    def values(self, pool: str) -> list:
        """Values of the initialized slots of ``pool`` in slot order."""
        slots = self.slots[pool]
        return [slots[i] for i in self.filled[pool]]

    def get(self, pool: str, index: int) -> Any:
        value = self.slots[pool][index]
        if value is EMPTY:
            raise StepNotEnabled(f"slot {pool}[{index}] read before it was written")
        return value

    def put(self, pool: str, index: int, value: Any) -> None:
        slots = self.slots[pool]
        if slots[index] is EMPTY:
            filled = self.filled[pool]
            filled.append(index)
            filled.sort()
        slots[index] = value


class ReplayResult(NamedTuple):
    status: str
    signature: FaultSignature | None


class Harness:
    """Executable definition of pools, action classes, and properties for one SUT."""

    def __init__(
        self,
        id: str,
        pools: Sequence[PoolSpec],
        classes: Sequence[ActionClassSpec],
        properties: Sequence[Property] = (),
        *,
        sut_factory: Callable[[], Any] | None = None,
        function_loc: dict[str, int] | None = None,
        probe_totals: tuple[int, int] = (0, 0),
        static_bindings: dict[str, frozenset[str]] | None = None,
        faults: dict[str, bool] | None = None,
    ):
        self.id = id
        self.pools = {p.name: p for p in pools}
        if len(self.pools) != len(pools):
            raise ValueError("pool names must be unique")
        self.classes = {c.id: c for c in classes}
        if len(self.classes) != len(classes):
            raise ValueError("action class ids must be unique")
        for c in classes:
            for pool in c.consumes + ((c.produces,) if c.produces else ()):
                if pool not in self.pools:
                    raise ValueError(f"class {c.id!r} references undeclared pool {pool!r}")
            if any(ch.isspace() for ch in c.id):
                raise ValueError(f"class id {c.id!r} contains whitespace")
        self.class_ids: tuple[str, ...] = tuple(sorted(self.classes))
        self.properties = tuple(properties)
        self.sut_factory = sut_factory
        self.function_loc = dict(function_loc or {})
        self.probe_totals = probe_totals
        self.static_bindings = dict(static_bindings or {})
        self.faults = dict(faults or {})
        self._ordered = [self.classes[c] for c in self.class_ids]

    def __repr__(self) -> str:
        return f"Harness({self.id!r}, classes={len(self.classes)})"

    # -- state ---------------------------------------------------------------

    def fresh_state(self) -> HarnessState:
        sut = self.sut_factory() if self.sut_factory is not None else None
        return HarnessState(self.pools.values(), sut)

    def reset(self, state: HarnessState | None = None) -> HarnessState:
        return self.fresh_state()

    # -- enabledness ---------------------------------------------------------

    def _guard_combos(self, state: HarnessState, spec: ActionClassSpec) -> list[tuple[int, ...]]:
        slot_lists = [state.filled[p] for p in spec.consumes]
        combos = []
        for combo in itertools.product(*slot_lists):
            args = [state.slots[p][i] for p, i in zip(spec.consumes, combo)]
            if spec.guard(*args):
                combos.append(combo)
        return combos

    def _class_enabled(self, state: HarnessState, spec: ActionClassSpec) -> bool:
        filled = state.filled
        for p in spec.consumes:
            if not filled[p]:
                return False
        if spec.guard is None:
            return True
        if not spec.consumes:
            return bool(spec.guard())
        return bool(self._guard_combos(state, spec))

    def enabled_classes(self, state: HarnessState, config: frozenset[str] | None = None) -> list[str]:
        """Ids of enabled classes, ascending."""
        out = []
        for spec in self._ordered:
            if config is not None and spec.id not in config:
                continue
            if self._class_enabled(state, spec):
                out.append(spec.id)
        return out

    def action_count(self, state: HarnessState, class_id: str) -> int:
        spec = self.classes[class_id]
        produced = self.pools[spec.produces].capacity if spec.produces else 1
        if spec.kind == VALUE_INIT:
            return produced * len(spec.domain)
        if spec.guard is not None:
            if not spec.consumes:
                return produced if spec.guard() else 0
            return len(self._guard_combos(state, spec)) * produced
        return math.prod(len(state.filled[p]) for p in spec.consumes) * produced

    def enabled_actions(
        self, state: HarnessState, config: Iterable[str] | None = None
    ) -> list[tuple[str, int]]:
        """(class-id, number of enabled concrete actions) for every enabled class."""
        cfg = frozenset(config) if config is not None else None
        return [(cid, self.action_count(state, cid)) for cid in self.enabled_classes(state, cfg)]

    def is_enabled(self, state: HarnessState, step: TestStep) -> bool:
        spec = self.classes.get(step.class_id)
        if spec is None or len(step.slots) != spec.arity:
            return False
        if spec.kind == VALUE_INIT:
            if step.value is None or not 0 <= step.value < len(spec.domain):
                return False
        elif step.value is not None:
            return False
        args = []
        for pool, idx in zip(spec.consumes, step.slots):
            if not 0 <= idx < self.pools[pool].capacity:
                return False
            value = state.slots[pool][idx]
            if value is EMPTY:
                return False
            args.append(value)
        if spec.produces is not None and not 0 <= step.slots[-1] < self.pools[spec.produces].capacity:
            return False
        if spec.guard is not None and not spec.guard(*args):
            return False
        return True

    def resolve(self, state: HarnessState, class_id: str, rng: random.Random) -> TestStep:
        """Pick a concrete action of an enabled class uniformly."""
        spec = self.classes[class_id]
        if spec.kind == VALUE_INIT:
            slot = rng.randrange(self.pools[spec.produces].capacity)
            return TestStep(class_id, (slot,), rng.randrange(len(spec.domain)))
        if spec.guard is not None and spec.consumes:
            combos = self._guard_combos(state, spec)
            if not combos:
                raise StepNotEnabled(f"class {class_id!r} is not enabled")
            slots = combos[rng.randrange(len(combos))]
        else:
            slots = []
            for pool in spec.consumes:
                filled = state.filled[pool]
                if not filled:
                    raise StepNotEnabled(f"class {class_id!r} is not enabled")
                slots.append(filled[rng.randrange(len(filled))])
            slots = tuple(slots)
        if spec.produces is not None:
            slots = slots + (rng.randrange(self.pools[spec.produces].capacity),)
        return TestStep(class_id, slots)

    # -- execution -----------------------------------------------------------

    def execute_step(
        self, state: HarnessState, step: TestStep, *, validate: bool = True, trace: bool = True
    ) -> StepOutcome:
        if state.poisoned:
            raise PoisonedState("state must be reset after a failure")
        spec = self.classes.get(step.class_id)
        if spec is None:
            raise UnknownActionClass(step.class_id)
        if validate and not self.is_enabled(state, step):
            raise StepNotEnabled(f"{step} is not enabled")

        entered: frozenset = frozenset()
        state.step_count += 1
        try:
            if spec.kind == VALUE_INIT:
                value = spec.domain[step.value]
                if spec.executor is not None:
                    value = spec.executor(value)
                state.put(spec.produces, step.slots[0], value)
            else:
                slots = state.slots
                args = [slots[p][i] for p, i in zip(spec.consumes, step.slots)]
                if trace:
                    with tracing.collect_entries() as sink:
                        try:
                            result = spec.executor(*args)
                        finally:
                            entered = tracing.entry_loc(sink)
                else:
                    result = spec.executor(*args)
                if spec.produces is not None:
                    state.put(spec.produces, step.slots[-1], result)
        except Exception as exc:  # noqa: BLE001 - any SUT exception is a failure
            state.poisoned = True
            sig = FaultSignature(f"raises:{spec.id}", type(exc).__name__)
            return StepOutcome(SUT_ERROR, sig, entered)

        for prop in self.properties:
            try:
                prop.check(state)
            except AssertionError:
                state.poisoned = True
                return StepOutcome(PROPERTY_VIOLATION, FaultSignature(prop.id, "assertion"), entered)
            except Exception as exc:  # noqa: BLE001
                state.poisoned = True
                return StepOutcome(PROPERTY_VIOLATION, FaultSignature(prop.id, type(exc).__name__), entered)
        return StepOutcome(OK, None, entered)

    def run_steps(self, steps: Iterable[TestStep], *, trace: bool = False) -> Iterator[StepOutcome]:
        """Execute ``steps`` on a fresh state, stopping after the first failure."""
        state = self.fresh_state()
        for step in steps:
            if step.class_id not in self.classes:
                raise UnknownActionClass(step.class_id)
            outcome = self.execute_step(state, step, validate=True, trace=trace)
            yield outcome
            if not outcome.ok:
                return

    def replay(self, testcase: TestCase) -> ReplayResult:
        for step in testcase.steps:
            if step.class_id not in self.classes:
                raise UnknownActionClass(step.class_id)
        last = ReplayResult(OK, None)
        for outcome in self.run_steps(testcase.steps):
            last = ReplayResult(outcome.status, outcome.signature)
        return last

    # -- structure -----------------------------------------------------------

    def producers(self, pool: str) -> list[str]:
        return [c.id for c in self._ordered if c.produces == pool]

    def dependency_graph(self) -> dict[str, frozenset[str]]:
        """class -> classes it depends on (sole producers of a pool it consumes).

        Producers that consume the pool they produce (copies, merges) cannot
        fill it from nothing and are not counted.
        """
        graph = {}
        for spec in self._ordered:
            deps = set()
            for pool in spec.consumes:
                prods = [
                    p for p in self.producers(pool) if p != spec.id and pool not in self.classes[p].consumes
                ]
                if len(prods) == 1:
                    deps.add(prods[0])
            graph[spec.id] = frozenset(deps)
        return graph

    def reachable_pools(self, enabled: Iterable[str]) -> set[str]:
        enabled = set(enabled)
        pools: set[str] = set()
        changed = True
        while changed:
            changed = False
            for cid in enabled:
                spec = self.classes[cid]
                if spec.produces and spec.produces not in pools and all(p in pools for p in spec.consumes):
                    pools.add(spec.produces)
                    changed = True
        return pools

    def viable(self, enabled: Iterable[str]) -> bool:
        """True if some SUT-calling class in ``enabled`` can ever become enabled."""
        enabled = set(enabled)
        pools = self.reachable_pools(enabled)
        return any(
            self.classes[c].kind == SUT_CALL and all(p in pools for p in self.classes[c].consumes)
            for c in enabled
        )


# -- test-case text format ----------------------------------------------------


def format_testcase(testcase: TestCase, harness: Harness | None = None, comments: Sequence[str] = ()) -> str:
    lines = [f"seed={testcase.seed}"]
    lines.extend(f"# {c}" for c in comments)
    for step in testcase.steps:
        parts = [step.class_id, *map(str, step.slots)]
        if step.value is not None:
            parts.append(str(step.value))
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def read_comments(text: str) -> dict[str, str]:
    """``# key=value`` comment lines of a serialized test."""
    out = {}
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition("=")
            if sep:
                out[key.strip()] = value.strip()
    return out


def parse_testcase(text: str, harness: Harness) -> TestCase:
    """Parse the line format; the harness supplies each class's slot arity."""
    seed = None
    steps = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if seed is None:
            if not line.startswith("seed="):
                raise ValueError(f"line {lineno}: expected 'seed=<u64>' header")
            seed = int(line[5:])
            if not 0 <= seed < 2**64:
                raise ValueError(f"line {lineno}: seed out of range")
            continue
        cid, *nums = line.split()
        spec = harness.classes.get(cid)
        if spec is None:
            raise UnknownActionClass(cid)
        try:
            ints = [int(n) for n in nums]
        except ValueError:
            raise ValueError(f"line {lineno}: non-integer field") from None
        expected = spec.arity + (1 if spec.kind == VALUE_INIT else 0)
        if len(ints) != expected:
            raise ValueError(f"line {lineno}: {cid} takes {expected} fields, got {len(ints)}")
        if spec.kind == VALUE_INIT:
            steps.append(TestStep(cid, tuple(ints[:-1]), ints[-1]))
        else:
            steps.append(TestStep(cid, tuple(ints)))
    if seed is None:
        raise ValueError("missing 'seed=' header")
    return TestCase(seed, tuple(steps))
