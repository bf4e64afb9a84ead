"""Probe-instrumented benchmark SUTs with seeded faults.

Faults are switched with configuration keys of the form
``bench.<harness-id>.fault.<fault-id>=on|off``.
"""

from __future__ import annotations

from typing import Callable, Iterable, Mapping

from ..harness import Harness
from .avl import avl_harness
from .codec import codec_harness
from .exprparser import exprparser_harness
from .heap import heap_harness
from .sortedlist import sortedlist_harness

HARNESSES: dict[str, Callable[..., Harness]] = {
    "avl": avl_harness,
    "codec": codec_harness,
    "exprparser": exprparser_harness,
    "heap": heap_harness,
    "sortedlist": sortedlist_harness,
}


class UnknownHarness(KeyError):
    pass


def fault_ids(harness_id: str) -> tuple[str, ...]:
    return tuple(get_harness(harness_id).faults)


def parse_fault_settings(settings: Iterable[str] | Mapping[str, str], harness_id: str | None = None) -> dict[str, dict[str, bool]]:
    """``bench.<id>.fault.<fault>=on|off`` lines (or a key->value mapping) to flags."""
    items = settings.items() if isinstance(settings, Mapping) else (_split(s) for s in settings)
    out: dict[str, dict[str, bool]] = {}
    for key, value in items:
        parts = key.strip().split(".")
        if len(parts) != 4 or parts[0] != "bench" or parts[2] != "fault":
            raise ValueError(f"not a fault key: {key!r}")
        value = str(value).strip().lower()
        if value not in ("on", "off"):
            raise ValueError(f"{key}: expected on|off, got {value!r}")
        hid, fid = parts[1], parts[3]
        if hid not in HARNESSES:
            raise UnknownHarness(hid)
        if harness_id is not None and hid != harness_id:
            continue
        out.setdefault(hid, {})[fid] = value == "on"
    return out


def _split(line: str) -> tuple[str, str]:
    key, sep, value = line.partition("=")
    if not sep:
        raise ValueError(f"expected key=value, got {line!r}")
    return key, value


def get_harness(harness_id: str, faults: Mapping[str, bool] | None = None) -> Harness:
    try:
        factory = HARNESSES[harness_id]
    except KeyError:
        raise UnknownHarness(harness_id) from None
    harness = factory()
    if faults:
        unknown = set(faults) - set(harness.faults)
        if unknown:
            raise ValueError(f"{harness_id} has no fault(s) {', '.join(sorted(unknown))}")
        harness = factory(dict(faults))
    return harness


def all_faults_on(harness_id: str) -> Harness:
    base = get_harness(harness_id)
    return get_harness(harness_id, {f: True for f in base.faults})


__all__ = [
    "HARNESSES",
    "UnknownHarness",
    "all_faults_on",
    "avl_harness",
    "codec_harness",
    "exprparser_harness",
    "fault_ids",
    "get_harness",
    "heap_harness",
    "parse_fault_settings",
    "sortedlist_harness",
]
