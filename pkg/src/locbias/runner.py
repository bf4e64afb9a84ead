"""Budgeted testing campaigns."""

from __future__ import annotations

import csv
import io
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from . import coverage
from .coverage import CoverageSnapshot, ProbeRegistry
from .harness import (
    DEFAULT_MAX_LENGTH,
    FaultSignature,
    Harness,
    HarnessError,
    TestCase,
    TestStep,
    format_testcase,
)
from .strategies import Strategy, StrategyConfig

ACTIONS = "actions"
SECONDS = "seconds"
OVERHEAD_SLICE = 0.01
CSV_FIELDS = ("trial", "strategy", "branches", "statements", "actions", "faults")


@dataclass(frozen=True)
class Budget:
    kind: str
    amount: float

    def __post_init__(self):
        if self.kind not in (ACTIONS, SECONDS):
            raise ValueError(f"unknown budget kind {self.kind!r}")
        if not self.amount > 0:
            raise ValueError("budget amount must be positive")

    @classmethod
    def actions(cls, n: int) -> Budget:
        return cls(ACTIONS, int(n))

    @classmethod
    def seconds(cls, s: float) -> Budget:
        return cls(SECONDS, float(s))


@dataclass(frozen=True)
class TrialResult:
    strategy_id: str
    seed: int
    actions: int
    tests: int
    coverage: CoverageSnapshot | None  # None when coverage was off
    signatures: frozenset[FaultSignature]
    failing_tests: tuple[tuple[FaultSignature, TestCase], ...] = ()
    wall_time: float = field(default=0.0, compare=False)

    @property
    def faults(self) -> int:
        return len(self.signatures)

    @property
    def detected(self) -> bool:
        return bool(self.signatures)

    @property
    def branches(self) -> int | None:
        return None if self.coverage is None else self.coverage.branches

    @property
    def statements(self) -> int | None:
        return None if self.coverage is None else self.coverage.statements

    def csv_row(self, trial: int | str | None = None) -> dict:
        return {
            "trial": self.seed if trial is None else trial,
            "strategy": self.strategy_id,
            "branches": "-" if self.coverage is None else self.coverage.branches,
            "statements": "-" if self.coverage is None else self.coverage.statements,
            "actions": self.actions,
            "faults": self.faults,
        }


class TrialRun:
    """A trial that can be advanced in slices and resumed mid-test.

    :func:`run_trial` drives one of these to completion; the overhead
    measurement interleaves two of them in short alternating slices.
    """

    def __init__(
        self,
        harness: Harness,
        strategy: StrategyConfig,
        *,
        coverage_on: bool = True,
        seed: int = 0,
        max_length: int = DEFAULT_MAX_LENGTH,
        keep_all_failures: bool = False,
        stop_when: Callable[[ProbeRegistry], bool] | None = None,
    ):
        self.harness = harness
        self.config = strategy
        self.seed = seed
        self.coverage_on = coverage_on
        self.max_length = max_length
        self.keep_all_failures = keep_all_failures
        self.stop_when = stop_when
        self.rng = random.Random(seed)
        self.strategy = Strategy(strategy, harness)
        self.registry = ProbeRegistry(enabled=coverage_on, track_test=strategy.plan_based)
        self.signatures: set[FaultSignature] = set()
        self.failing: list[tuple[FaultSignature, TestCase]] = []
        self.actions = 0
        self.tests = 0
        self.elapsed = 0.0
        self.stopped = False
        self._idle = 0
        self._test = None  # (seed, state, prefix, length, allowed, steps, replaying)

    def _begin_test(self) -> None:
        test_seed = self.rng.getrandbits(64)
        state = self.harness.fresh_state()
        self.registry.start_test()
        plan = self.strategy.begin_test(self.rng, self.max_length)
        prefix = plan.prefix if plan is not None else ()
        length = plan.length if plan is not None else self.max_length
        self._test = [test_seed, state, prefix, length, self.strategy.allowed, [], bool(prefix)]

    def _end_test(self, failed: bool) -> None:
        steps = self._test[5]
        if steps:
            self.tests += 1
            self._idle = 0
        else:
            self._idle += 1
            if self._idle > 1000:
                raise HarnessError(
                    f"strategy {self.config.id!r} produces only empty tests on {self.harness.id!r}"
                )
        self.strategy.end_test(steps, self.registry.test_fitness(), failed)
        self._test = None

    def advance(self, max_actions: int | None = None, deadline: float | None = None) -> None:
        """Execute actions until ``max_actions`` total, ``deadline`` (perf_counter), or a stop."""
        harness = self.harness
        execute = harness.execute_step
        is_enabled = harness.is_enabled
        rng = self.rng
        choose = self.strategy.choose
        start = time.perf_counter()

        def spent() -> bool:
            if max_actions is not None and self.actions >= max_actions:
                return True
            return deadline is not None and time.perf_counter() >= deadline

        try:
            with coverage.activate(self.registry):
                while not self.stopped and not spent():
                    if self._test is None:
                        self._begin_test()
                    test = self._test
                    state, prefix, length, allowed, steps = test[1], test[2], test[3], test[4], test[5]
                    failed = False
                    finished = True
                    while len(steps) < length:
                        if spent():
                            finished = False
                            break
                        step = None
                        if test[6]:
                            cand = prefix[len(steps)] if len(steps) < len(prefix) else None
                            if cand is not None and is_enabled(state, cand):
                                step = cand
                            else:
                                test[6] = False
                        if step is None:
                            enabled = harness.enabled_classes(state, allowed)
                            if not enabled:
                                break
                            step = harness.resolve(state, choose(enabled, rng), rng)
                        steps.append(step)
                        outcome = execute(state, step, validate=False, trace=False)
                        self.actions += 1
                        if outcome.signature is not None:
                            failed = True
                            sig = outcome.signature
                            if sig not in self.signatures or self.keep_all_failures:
                                self.failing.append((sig, TestCase(test[0], tuple(steps))))
                            self.signatures.add(sig)
                            break
                        if self.stop_when is not None and self.stop_when(self.registry):
                            self.stopped = True
                            break
                    if finished or failed or self.stopped:
                        self._end_test(failed)
        finally:
            self.elapsed += time.perf_counter() - start

    def close(self) -> None:
        """Finish a test cut short by the budget."""
        if self._test is not None:
            self._end_test(False)

    def result(self) -> TrialResult:
        self.close()
        return TrialResult(
            strategy_id=self.config.id,
            seed=self.seed,
            actions=self.actions,
            tests=self.tests,
            coverage=self.registry.snapshot() if self.coverage_on else None,
            signatures=frozenset(self.signatures),
            failing_tests=tuple(self.failing),
            wall_time=self.elapsed,
        )


def run_trial(
    harness: Harness,
    strategy: StrategyConfig,
    budget: Budget,
    *,
    coverage_on: bool = True,
    seed: int = 0,
    max_length: int = DEFAULT_MAX_LENGTH,
    keep_all_failures: bool = False,
    stop_when: Callable[[ProbeRegistry], bool] | None = None,
) -> TrialResult:
    """Run tests with ``strategy`` until ``budget`` is spent.

    Stepwise strategies choose each class as the test proceeds; GA variants
    replay a planned prefix and regenerate from the first step that is no
    longer enabled.  ``stop_when`` is polled after every action.
    """
    run = TrialRun(
        harness, strategy, coverage_on=coverage_on, seed=seed, max_length=max_length,
        keep_all_failures=keep_all_failures, stop_when=stop_when,
    )
    if budget.kind == SECONDS:
        run.advance(deadline=time.perf_counter() + budget.amount)
    else:
        run.advance(max_actions=int(budget.amount))
    return run.result()


def measure_overhead(
    harness: Harness,
    strategy: StrategyConfig,
    seconds: float,
    repetitions: int = 10,
    seed: int = 0,
) -> float:
    """Mean over repetitions of actions-without-coverage / actions-with-coverage."""
    return overhead_ratios(harness, strategy, seconds, repetitions, seed).mean


@dataclass(frozen=True)
class OverheadReport:
    actions_off: tuple[int, ...]
    actions_on: tuple[int, ...]

    @property
    def ratios(self) -> tuple[float, ...]:
        return tuple(off / on for off, on in zip(self.actions_off, self.actions_on))

    @property
    def mean(self) -> float:
        r = self.ratios
        return sum(r) / len(r)


def overhead_ratios(
    harness: Harness,
    strategy: StrategyConfig,
    seconds: float,
    repetitions: int = 10,
    seed: int = 0,
    slice_seconds: float = OVERHEAD_SLICE,
) -> OverheadReport:
    """Paired coverage-on/off trials with the same seed and the same time budget.

    The two trials of a pair run interleaved in short alternating slices, each
    charged only for its own slices, so slow drifts in machine speed hit both
    sides alike.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    if not seconds > 0:
        raise ValueError("seconds must be positive")
    on, off = [], []
    for i in range(repetitions):
        s = seed + i
        with_cov = TrialRun(harness, strategy, coverage_on=True, seed=s)
        without = TrialRun(harness, strategy, coverage_on=False, seed=s)
        # alternate which side goes first so neither always starts warm
        pair = [with_cov, without] if i % 2 == 0 else [without, with_cov]
        while any(r.elapsed < seconds for r in pair):
            for r in pair:
                remaining = seconds - r.elapsed
                if remaining > 0:
                    r.advance(deadline=time.perf_counter() + min(slice_seconds, remaining))
        on.append(max(with_cov.actions, 1))
        off.append(without.actions)
    return OverheadReport(tuple(off), tuple(on))


def results_csv(results: Sequence[TrialResult], trial_ids: Sequence | None = None) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for i, r in enumerate(results):
        writer.writerow(r.csv_row(None if trial_ids is None else trial_ids[i]))
    return buf.getvalue()


def signature_filename(sig: FaultSignature) -> str:
    safe = "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in str(sig).replace("/", "__"))
    return f"{safe}.test"


def write_failing_tests(result: TrialResult, directory: str | Path, harness: Harness | None = None) -> list[Path]:
    """Serialize each exemplar to ``directory/<signature>.test``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    seen: dict[str, int] = {}
    for sig, tc in result.failing_tests:
        name = signature_filename(sig)
        n = seen.get(name, 0)
        seen[name] = n + 1
        if n:
            name = name.replace(".test", f".{n}.test")
        comments = [f"signature={sig}"]
        if harness is not None:
            comments.insert(0, f"harness={harness.id}")
            if harness.faults:
                comments.append("faults=" + ",".join(f"{k}:{'on' if v else 'off'}" for k, v in sorted(harness.faults.items())))
        path = out / name
        path.write_text(format_testcase(tc, harness, comments))
        paths.append(path)
    return paths
