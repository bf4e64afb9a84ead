"""Shared fixtures: a contrived SUT with fixed entered-function sets."""

from __future__ import annotations

import pytest

from locbias.harness import SUT_CALL, VALUE_INIT, ActionClassSpec, Harness, PoolSpec, Property
from locbias.tracing import SutModule

_sut = SutModule("contrived")


@_sut.traced(loc=30)
def f(x):
    return x + 1


@_sut.traced(loc=14)
def h(x):
    return x * 2


@_sut.traced(loc=6)
def g(x):
    # g always calls h twice; h must count once
    return h(x) + h(x + 1)


def call_f_40_times(x):
    total = 0
    for _ in range(40):
        total = f(total)
    return total + x


def f_or_h(x):
    return f(x) if x % 2 else h(x)


def contrived_harness(extra: bool = False) -> Harness:
    """Classes ``int`` (value-init), ``f`` (30 LOC), ``g`` (6 + 14 = 20 LOC).

    ``extra`` adds ``mixed``, which enters f or h depending on the int's parity.
    """
    specs = [
        ActionClassSpec("int", VALUE_INIT, produces="int", domain=range(1, 21)),
        ActionClassSpec("f", SUT_CALL, call_f_40_times, consumes=("int",)),
        ActionClassSpec("g", SUT_CALL, g, consumes=("int",)),
    ]
    if extra:
        specs.append(ActionClassSpec("mixed", SUT_CALL, f_or_h, consumes=("int",)))
    return Harness(
        "contrived",
        [PoolSpec("int", 4)],
        specs,
        [Property("never", lambda state: None)],
        function_loc=_sut.function_loc,
        static_bindings={"f": frozenset({"contrived.f"}), "g": frozenset({"contrived.g"})},
    )


@pytest.fixture
def contrived() -> Harness:
    return contrived_harness()


@pytest.fixture
def contrived_mixed() -> Harness:
    return contrived_harness(extra=True)
