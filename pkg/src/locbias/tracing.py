"""Function-entry hook for LOC measurement.

SUT functions are wrapped with :meth:`SutModule.traced`.  While a sink is
open (see :func:`collect_entries`) every wrapped function adds its id to the
sink on entry; a set, so each function counts once per action no matter how
often it is called.  Harness code is never wrapped and therefore never
reported, which plays the role of skipping the driver file.
"""

from __future__ import annotations

import contextlib
import contextvars
import functools
import inspect
from typing import Callable, Iterator, TypeVar

F = TypeVar("F", bound=Callable)

_SINK: contextvars.ContextVar[set[str] | None] = contextvars.ContextVar(
    "locbias_entry_sink", default=None
)

#: function-id -> declared LOC, for every traced function in the process.
FUNCTION_LOC: dict[str, int] = {}


def source_loc(fn: Callable) -> int:
    """Line count of ``fn``'s source, decorators, blanks and comments included."""
    return len(inspect.getsourcelines(inspect.unwrap(fn))[0])


class SutModule:
    """Collects the traced functions of one SUT and their LOC."""

    def __init__(self, name: str):
        self.name = name
        self.function_loc: dict[str, int] = {}

    def traced(self, fn: F | None = None, *, loc: int | None = None, name: str | None = None):
        """Register ``fn`` and report its entry to the active sink.

        ``loc`` defaults to the function's own source line count.
        """

        def decorate(f: F) -> F:
            fid = f"{self.name}.{name or f.__qualname__}"
            size = source_loc(f) if loc is None else int(loc)
            if size < 0:
                raise ValueError("loc must be non-negative")
            if fid in FUNCTION_LOC and FUNCTION_LOC[fid] != size:
                raise ValueError(f"function id {fid!r} registered twice with different LOC")
            FUNCTION_LOC[fid] = size
            self.function_loc[fid] = size

            @functools.wraps(f)
            def wrapper(*args, **kwargs):
                sink = _SINK.get()
                if sink is not None:
                    sink.add(fid)
                return f(*args, **kwargs)

            wrapper.__locbias_id__ = fid
            return wrapper  # type: ignore[return-value]

        if fn is not None:
            return decorate(fn)
        return decorate


def entry_loc(function_ids) -> frozenset[tuple[str, int]]:
    return frozenset((fid, FUNCTION_LOC[fid]) for fid in function_ids)


@contextlib.contextmanager
def collect_entries() -> Iterator[set[str]]:
    """Open a fresh sink; yields the set that fills with entered function ids."""
    sink: set[str] = set()
    token = _SINK.set(sink)
    try:
        yield sink
    finally:
        _SINK.reset(token)


@contextlib.contextmanager
def suspend_entries() -> Iterator[None]:
    token = _SINK.set(None)
    try:
        yield
    finally:
        _SINK.reset(token)
