"""In-process branch/statement probes.

Bench SUTs call :func:`branch` and :func:`stmt` with small integer ids.  Hits
land in whichever :class:`ProbeRegistry` is active for the current context;
with no active registry (or a disabled one) a probe does nothing.
"""

from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass, field
from typing import Iterator

BRANCH = "branch"
STMT = "stmt"

_ACTIVE: contextvars.ContextVar[ProbeRegistry | None] = contextvars.ContextVar(
    "locbias_probe_registry", default=None
)


class ProbeRegistry:
    """Distinct-hit sets for one trial.

    ``track_test`` keeps a second pair of sets that the runner clears at each
    test boundary; the GA strategy scores tests from them.
    """

    __slots__ = ("branches", "stmts", "enabled", "test_branches", "test_stmts")

    def __init__(self, enabled: bool = True, track_test: bool = False):
        self.enabled = enabled
        self.branches: set[int] = set()
        self.stmts: set[int] = set()
        self.test_branches: set[int] | None = set() if track_test else None
        self.test_stmts: set[int] | None = set() if track_test else None

    def hit(self, kind: str, probe_id: int) -> None:
        if not self.enabled:
            return
        if kind == BRANCH:
            self.branches.add(probe_id)
            if self.test_branches is not None:
                self.test_branches.add(probe_id)
        elif kind == STMT:
            self.stmts.add(probe_id)
            if self.test_stmts is not None:
                self.test_stmts.add(probe_id)
        else:
            raise ValueError(f"unknown probe kind {kind!r}")

    def start_test(self) -> None:
        if self.test_branches is not None:
            self.test_branches.clear()
            self.test_stmts.clear()

    def test_fitness(self) -> int:
        """Distinct probes hit since the last :meth:`start_test`."""
        if self.test_branches is None:
            return 0
        return len(self.test_branches) + len(self.test_stmts)

    def snapshot(self) -> CoverageSnapshot:
        return CoverageSnapshot(frozenset(self.branches), frozenset(self.stmts))


@dataclass(frozen=True)
class CoverageSnapshot:
    branch_ids: frozenset[int] = field(default_factory=frozenset)
    stmt_ids: frozenset[int] = field(default_factory=frozenset)

    @property
    def branches(self) -> int:
        return len(self.branch_ids)

    @property
    def statements(self) -> int:
        return len(self.stmt_ids)


EMPTY = CoverageSnapshot()


def snapshot(registry: ProbeRegistry) -> CoverageSnapshot:
    return registry.snapshot()


def merge(a: CoverageSnapshot, b: CoverageSnapshot) -> CoverageSnapshot:
    return CoverageSnapshot(a.branch_ids | b.branch_ids, a.stmt_ids | b.stmt_ids)


def probe(kind: str, probe_id: int) -> None:
    reg = _ACTIVE.get()
    if reg is not None:
        reg.hit(kind, probe_id)


def branch(probe_id: int) -> None:
    reg = _ACTIVE.get()
    if reg is None or not reg.enabled:
        return
    reg.branches.add(probe_id)
    if reg.test_branches is not None:
        reg.test_branches.add(probe_id)


def stmt(probe_id: int) -> None:
    reg = _ACTIVE.get()
    if reg is None or not reg.enabled:
        return
    reg.stmts.add(probe_id)
    if reg.test_stmts is not None:
        reg.test_stmts.add(probe_id)


def active_registry() -> ProbeRegistry | None:
    return _ACTIVE.get()


@contextlib.contextmanager
def activate(registry: ProbeRegistry | None) -> Iterator[ProbeRegistry | None]:
    token = _ACTIVE.set(registry)
    try:
        yield registry
    finally:
        _ACTIVE.reset(token)
