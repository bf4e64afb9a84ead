"""Per-class LOC estimates and the LOC-biased selection distribution.

Zero-LOC classes share 20% of the probability mass evenly; the remaining 80%
goes to the other classes in proportion to their share of the total LOC.
"""

from __future__ import annotations

import json
import random
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .harness import DEFAULT_MAX_LENGTH, Harness, HarnessError

FORMAT_VERSION = 1
ZERO_MASS = 0.2
LOC_MASS = 0.8
DEFAULT_SAMPLING_BUDGET = 10_000


class LocMapError(ValueError):
    pass


@dataclass(frozen=True)
class LocEntry:
    mean_loc: float
    samples: int


@dataclass(frozen=True)
class LocMap:
    entries: Mapping[str, LocEntry] = field(default_factory=dict)
    unsampled: frozenset[str] = frozenset()
    harness_id: str = ""

    def __post_init__(self):
        for cid, e in self.entries.items():
            if e.samples == 0 and e.mean_loc != 0:
                raise LocMapError(f"{cid}: mean_loc must be 0 with no samples")
            if e.mean_loc < 0 or e.samples < 0:
                raise LocMapError(f"{cid}: negative entry")

    @property
    def class_ids(self) -> list[str]:
        return sorted(set(self.entries) | set(self.unsampled))

    def mean(self, class_id: str) -> float:
        e = self.entries.get(class_id)
        return e.mean_loc if e is not None else 0.0

    def means(self) -> dict[str, float]:
        return {cid: self.mean(cid) for cid in self.class_ids}

    def scaled(self, factors: Mapping[str, float]) -> LocMap:
        """Copy with each sampled mean multiplied by ``factors[class]`` (default 1)."""
        entries = {
            cid: LocEntry(e.mean_loc * factors.get(cid, 1.0), e.samples) for cid, e in self.entries.items()
        }
        return LocMap(entries, self.unsampled, self.harness_id)


@dataclass(frozen=True)
class ProbabilityTable:
    probs: Mapping[str, float]
    m0: int = 0
    m1: float = 0.0

    @property
    def class_ids(self) -> list[str]:
        return sorted(self.probs)

    def __getitem__(self, class_id: str) -> float:
        return self.probs[class_id]


def uniform_table(class_ids: Iterable[str]) -> ProbabilityTable:
    ids = sorted(class_ids)
    if not ids:
        raise LocMapError("empty harness")
    return ProbabilityTable({c: 1.0 / len(ids) for c in ids}, m0=len(ids), m1=0.0)


def loc_distribution(locmap: LocMap | Mapping[str, float]) -> ProbabilityTable:
    """Selection probabilities from mean LOC values.

    Accepts a :class:`LocMap` (unsampled classes count as zero) or a plain
    ``{class: mean}`` mapping.  With no zero class the whole mass is
    proportional; with no positive class the table is uniform.
    """
    means = locmap.means() if isinstance(locmap, LocMap) else dict(locmap)
    if not means:
        raise LocMapError("empty harness")
    zero = [c for c, m in means.items() if m == 0]
    m0 = len(zero)
    m1 = sum(m for m in means.values() if m > 0)
    if m1 == 0:
        return uniform_table(means)
    positive_mass = LOC_MASS if m0 else 1.0
    probs = {}
    for cid in sorted(means):
        m = means[cid]
        probs[cid] = ZERO_MASS / m0 if m == 0 else positive_mass * (m / m1)
    return ProbabilityTable(probs, m0=m0, m1=m1)


def static_loc(
    function_table: Mapping[str, int],
    bindings: Mapping[str, Iterable[str]],
    class_ids: Iterable[str] = (),
    harness_id: str = "",
) -> LocMap:
    """LOC from the functions each class names directly, with no call-graph closure."""
    entries = {}
    for cid, fids in bindings.items():
        total = 0
        for fid in fids:
            if fid not in function_table:
                raise LocMapError(f"unknown function id {fid!r}")
            total += function_table[fid]
        entries[cid] = LocEntry(float(total), 1)
    unsampled = frozenset(set(class_ids) - set(entries))
    return LocMap(entries, unsampled, harness_id)


def sample_loc(
    harness: Harness,
    budget: int = DEFAULT_SAMPLING_BUDGET,
    seed: int = 0,
    *,
    seconds: float | None = None,
    max_length: int = DEFAULT_MAX_LENGTH,
    trace: list | None = None,
) -> LocMap:
    """Estimate each class's mean LOC by random testing with the entry hook on.

    Any enabled class not yet sampled is preferred over sampled ones.  Steps
    that fail still contribute their sample.  With ``seconds`` set, the
    wall-clock limit replaces the action budget.  ``trace`` (if given)
    receives ``(chosen, enabled_unsampled)`` per step.
    """
    rng = random.Random(seed)
    totals: dict[str, int] = {}
    counts: dict[str, int] = {}
    deadline = None if seconds is None else time.perf_counter() + seconds
    actions = 0
    idle_tests = 0

    def exhausted() -> bool:
        if deadline is not None:
            return time.perf_counter() >= deadline
        return actions >= budget

    while not exhausted():
        state = harness.fresh_state()
        length = 0
        while length < max_length and not exhausted():
            enabled = harness.enabled_classes(state)
            if not enabled:
                break
            fresh = [c for c in enabled if c not in counts]
            pool = fresh or enabled
            cid = pool[rng.randrange(len(pool))]
            if trace is not None:
                trace.append((cid, frozenset(fresh)))
            step = harness.resolve(state, cid, rng)
            outcome = harness.execute_step(state, step, validate=False, trace=True)
            totals[cid] = totals.get(cid, 0) + outcome.loc
            counts[cid] = counts.get(cid, 0) + 1
            actions += 1
            length += 1
            if not outcome.ok:
                break
        if length == 0:
            idle_tests += 1
            if idle_tests > 1000:
                raise HarnessError(f"harness {harness.id!r} has no enabled action at a fresh state")
        else:
            idle_tests = 0

    entries = {cid: LocEntry(totals[cid] / counts[cid], counts[cid]) for cid in counts}
    unsampled = frozenset(c for c in harness.class_ids if c not in counts)
    return LocMap(entries, unsampled, harness.id)


def save_locmap(locmap: LocMap, destination: str | Path) -> None:
    classes = [
        {"id": cid, "mean_loc": locmap.mean(cid), "samples": locmap.entries[cid].samples if cid in locmap.entries else 0}
        for cid in locmap.class_ids
    ]
    doc = {"version": FORMAT_VERSION, "harness-id": locmap.harness_id, "classes": classes}
    Path(destination).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_locmap(source: str | Path, harness: Harness | None = None) -> LocMap:
    """Read a saved map; with ``harness``, reconcile it against the current classes.

    Classes the harness no longer has are dropped with a warning; classes the
    file does not mention become unsampled.
    """
    try:
        doc = json.loads(Path(source).read_text())
    except json.JSONDecodeError as exc:
        raise LocMapError(f"malformed LOC map: {exc}") from None
    if not isinstance(doc, dict) or "classes" not in doc or "version" not in doc:
        raise LocMapError("malformed LOC map: missing fields")
    if doc["version"] != FORMAT_VERSION:
        raise LocMapError(f"unsupported LOC map version {doc['version']!r}")
    harness_id = doc.get("harness-id", "")
    entries = {}
    unsampled = set()
    try:
        for item in doc["classes"]:
            cid, mean, n = item["id"], float(item["mean_loc"]), int(item["samples"])
            if n == 0:
                unsampled.add(cid)
            else:
                entries[cid] = LocEntry(mean, n)
    except (KeyError, TypeError, ValueError) as exc:
        raise LocMapError(f"malformed LOC map entry: {exc}") from None
    if harness is not None:
        if harness_id and harness_id != harness.id:
            warnings.warn(f"LOC map was sampled on {harness_id!r}, loading for {harness.id!r}", stacklevel=2)
        known = set(harness.class_ids)
        retired = sorted((set(entries) | unsampled) - known)
        if retired:
            warnings.warn(f"dropping classes absent from harness: {', '.join(retired)}", stacklevel=2)
        entries = {c: e for c, e in entries.items() if c in known}
        unsampled = (unsampled & known) | (known - set(entries))
        harness_id = harness.id
    return LocMap(entries, frozenset(unsampled), harness_id)
