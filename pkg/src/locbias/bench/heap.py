"""Binary min-heap with a latent sift-down fault, plus its test harness.

With ``sift_fault`` on, a pop from a heap holding ``FAULT_MIN_SIZE`` or more
items (three or more levels) stops sifting one level early, never moving an
element into the deepest level.  Small heaps behave correctly and the damage
only shows after a later pop.
"""

from __future__ import annotations

from ..coverage import branch as _b
from ..coverage import stmt as _s
from ..harness import SUT_CALL, VALUE_INIT, ActionClassSpec, Harness, PoolSpec, Property
from ..tracing import SutModule

_sut = SutModule("heap")

N_BRANCH = 16
N_STMT = 5
FAULT_MIN_SIZE = 7
FAULTS = ("sift",)


class Heap:
    @_sut.traced
    def __init__(self, sift_fault=False):
        _s(0)
        self._items = []
        self._fault = sift_fault

    @_sut.traced
    def push(self, value):
        items = self._items
        items.append(value)
        i = len(items) - 1
        if i == 0:
            _b(0)
            return
        # sift the new item up towards the root
        while i > 0:
            parent = (i - 1) // 2
            if items[i] < items[parent]:
                _b(1)
                items[i], items[parent] = items[parent], items[i]
                i = parent
            else:
                _b(2)
                break
        if i == 0:
            _b(3)
        else:
            _b(4)

    @_sut.traced
    def pop(self):
        items = self._items
        if not items:
            _b(5)
            raise IndexError("pop from empty heap")
        last = items.pop()
        if not items:
            _b(6)
            return last
        _b(7)
        top = items[0]
        items[0] = last
        self._sift_down(0, len(items) + 1)
        return top

    @_sut.traced
    def _sift_down(self, i, size_before):
        items = self._items
        n = len(items)
        last_level = n.bit_length() - 1
        while True:
            left = 2 * i + 1
            if left >= n:
                _b(8)
                return
            right = left + 1
            child = left
            if right < n and items[right] < items[left]:
                _b(9)
                child = right
            else:
                _b(10)
            if items[child] >= items[i]:
                _b(11)
                return
            if self._fault and size_before >= FAULT_MIN_SIZE and (child + 1).bit_length() - 1 == last_level:
                _b(12)
                return
            _s(1)
            items[i], items[child] = items[child], items[i]
            i = child

    @_sut.traced
    def peek(self):
        if not self._items:
            _b(13)
            raise IndexError("peek at empty heap")
        _s(2)
        return self._items[0]

    @_sut.traced
    def __len__(self):
        _s(3)
        return len(self._items)

    @_sut.traced
    def is_empty(self):
        if self._items:
            _b(14)
            return False
        _b(15)
        return True

    @_sut.traced
    def clear(self):
        _s(4)
        self._items = []


# -- harness ------------------------------------------------------------------


class _Cell:
    __slots__ = ("heap", "ref", "checks")

    def __init__(self, heap):
        self.heap = heap
        self.ref = []
        self.checks = []  # (got, expected) pairs awaiting the property


def _check_min(state):
    for cell in state.values("heap"):
        pending, cell.checks = cell.checks, []
        for got, expected in pending:
            assert got == expected


def heap_harness(faults: dict[str, bool] | None = None) -> Harness:
    faults = {f: bool((faults or {}).get(f, False)) for f in FAULTS}
    fault_on = faults["sift"]

    def new():
        return _Cell(Heap(sift_fault=fault_on))

    def push(cell, value):
        cell.heap.push(value)
        cell.ref.append(value)

    def pop(cell):
        got = cell.heap.pop()
        expected = min(cell.ref)
        cell.ref.remove(expected)
        cell.checks.append((got, expected))

    def peek(cell):
        cell.checks.append((cell.heap.peek(), min(cell.ref)))

    def size(cell):
        cell.checks.append((len(cell.heap), len(cell.ref)))

    def empty(cell):
        cell.checks.append((cell.heap.is_empty(), not cell.ref))

    def clear(cell):
        cell.heap.clear()
        cell.ref.clear()

    def nonempty(cell):
        return bool(cell.ref)

    classes = [
        ActionClassSpec("int", VALUE_INIT, produces="int", domain=range(0, 20)),
        ActionClassSpec("heap_new", SUT_CALL, new, produces="heap"),
        ActionClassSpec("heap_push", SUT_CALL, push, consumes=("heap", "int")),
        ActionClassSpec("heap_pop", SUT_CALL, pop, consumes=("heap",), guard=nonempty),
        ActionClassSpec("heap_peek", SUT_CALL, peek, consumes=("heap",), guard=nonempty),
        ActionClassSpec("heap_size", SUT_CALL, size, consumes=("heap",)),
        ActionClassSpec("heap_empty", SUT_CALL, empty, consumes=("heap",)),
        ActionClassSpec("heap_clear", SUT_CALL, clear, consumes=("heap",)),
    ]
    return Harness(
        "heap",
        [PoolSpec("int", 4), PoolSpec("heap", 2)],
        classes,
        [Property("pop_is_min", _check_min)],
        function_loc=_sut.function_loc,
        probe_totals=(N_BRANCH, N_STMT),
        static_bindings={
            "heap_new": frozenset({"heap.Heap.__init__"}),
            "heap_push": frozenset({"heap.Heap.push"}),
            "heap_pop": frozenset({"heap.Heap.pop"}),
            "heap_peek": frozenset({"heap.Heap.peek"}),
            "heap_size": frozenset({"heap.Heap.__len__"}),
            "heap_empty": frozenset({"heap.Heap.is_empty"}),
            "heap_clear": frozenset({"heap.Heap.clear"}),
        },
        faults=faults,
    )
