"""Sorted list built from bounded sublists, plus its differential harness.

Seeded faults:

``slice``
    slices longer than ``SLICE_FAULT_LEN`` lose their final element.
``union``
    when the merged inputs exceed ``UNION_FAULT_SIZE`` elements, equal heads
    are emitted once instead of twice.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right, insort

from ..coverage import branch as _b
from ..coverage import stmt as _s
from ..harness import SUT_CALL, VALUE_INIT, ActionClassSpec, Harness, PoolSpec, Property
from ..tracing import SutModule

_sut = SutModule("sortedlist")

N_BRANCH = 60
N_STMT = 11
LOAD = 4
SLICE_FAULT_LEN = 5
UNION_FAULT_SIZE = 8
FAULTS = ("slice", "union")


class SortedList:
    @_sut.traced
    def __init__(self, values=(), faults=frozenset()):
        _s(0)
        self._lists = []
        self._maxes = []
        self._len = 0
        self._faults = faults
        for v in values:
            self.add(v)

    @_sut.traced
    def add(self, value):
        lists, maxes = self._lists, self._maxes
        if not maxes:
            _b(0)
            lists.append([value])
            maxes.append(value)
            self._len = 1
            return
        pos = bisect_right(maxes, value)
        if pos == len(maxes):
            # beyond the current maximum: goes at the end of the last sublist
            _b(1)
            pos -= 1
            lists[pos].append(value)
            maxes[pos] = value
        else:
            _b(2)
            insort(lists[pos], value)
        self._len += 1
        if len(lists[pos]) > 2 * LOAD:
            _b(3)
            self._expand(pos)
        else:
            _b(4)

    @_sut.traced
    def _expand(self, pos):
        _s(1)
        lists, maxes = self._lists, self._maxes
        sub = lists[pos]
        half = sub[LOAD:]
        del sub[LOAD:]
        maxes[pos] = sub[-1]
        lists.insert(pos + 1, half)
        maxes.insert(pos + 1, half[-1])

    @_sut.traced
    def remove(self, value):
        maxes = self._maxes
        if not maxes:
            _b(5)
            raise ValueError(f"{value!r} not in list")
        pos = bisect_left(maxes, value)
        if pos == len(maxes):
            _b(6)
            raise ValueError(f"{value!r} not in list")
        sub = self._lists[pos]
        idx = bisect_left(sub, value)
        if sub[idx] != value:
            _b(7)
            raise ValueError(f"{value!r} not in list")
        _b(8)
        self._delete(pos, idx)

    @_sut.traced
    def discard(self, value):
        try:
            self.remove(value)
        except ValueError:
            _b(9)
            return False
        _b(10)
        return True

    @_sut.traced
    def _delete(self, pos, idx):
        lists, maxes = self._lists, self._maxes
        sub = lists[pos]
        del sub[idx]
        self._len -= 1
        if len(sub) > LOAD // 2:
            _b(11)
            maxes[pos] = sub[-1]
            return
        if len(lists) == 1:
            if sub:
                _b(12)
                maxes[pos] = sub[-1]
            else:
                _b(13)
                del lists[pos]
                del maxes[pos]
            return
        # small sublist: fold it into a neighbour and rebalance
        _s(2)
        if pos == 0:
            _b(14)
            pos = 1
        else:
            _b(15)
        prev = pos - 1
        lists[prev].extend(lists[pos])
        maxes[prev] = lists[prev][-1]
        del lists[pos]
        del maxes[pos]
        if len(lists[prev]) > 2 * LOAD:
            _b(16)
            self._expand(prev)
        else:
            _b(17)

    @_sut.traced
    def __len__(self):
        _s(3)
        return self._len

    @_sut.traced
    def __contains__(self, value):
        maxes = self._maxes
        if not maxes:
            _b(18)
            return False
        pos = bisect_left(maxes, value)
        if pos == len(maxes):
            _b(19)
            return False
        sub = self._lists[pos]
        found = sub[bisect_left(sub, value)] == value
        if found:
            _b(20)
        else:
            _b(21)
        return found

    @_sut.traced
    def _locate(self, index):
        """Sublist position and offset of a non-negative flat index."""
        for pos, sub in enumerate(self._lists):
            if index < len(sub):
                _b(22)
                return pos, index
            index -= len(sub)
        _b(23)
        raise IndexError("list index out of range")

    @_sut.traced
    def __getitem__(self, index):
        if index < 0:
            _b(24)
            index += self._len
        else:
            _b(25)
        if not 0 <= index < self._len:
            _b(26)
            raise IndexError("list index out of range")
        if index == 0:
            _b(27)
            return self._lists[0][0]
        if index == self._len - 1:
            _b(28)
            return self._lists[-1][-1]
        _b(29)
        pos, idx = self._locate(index)
        return self._lists[pos][idx]

    @_sut.traced
    def get_slice(self, start, stop):
        """Items ``start:stop`` with Python slice clamping (step 1)."""
        size = self._len
        if start < 0:
            _b(30)
            start = max(start + size, 0)
        elif start > size:
            _b(31)
            start = size
        else:
            _b(32)
        if stop < 0:
            _b(33)
            stop = max(stop + size, 0)
        elif stop > size:
            _b(34)
            stop = size
        else:
            _b(35)
        if start >= stop:
            _b(36)
            return []
        if start == 0 and stop == size:
            _b(37)
            return [v for sub in self._lists for v in sub]
        pos, idx = self._locate(start)
        out = []
        want = stop - start
        if "slice" in self._faults and want > SLICE_FAULT_LEN:
            _b(38)
            want -= 1
        while len(out) < want:
            sub = self._lists[pos]
            take = sub[idx : idx + (want - len(out))]
            if len(take) == len(sub) - idx:
                _b(39)
            else:
                _b(40)
            out.extend(take)
            pos += 1
            idx = 0
        _s(4)
        return out

    @_sut.traced
    def count(self, value):
        maxes = self._maxes
        if not maxes:
            _b(41)
            return 0
        pos_left = bisect_left(maxes, value)
        if pos_left == len(maxes):
            _b(42)
            return 0
        pos_right = bisect_right(maxes, value)
        if pos_right == len(maxes):
            _b(43)
            pos_right -= 1
        else:
            _b(44)
        total = 0
        for pos in range(pos_left, pos_right + 1):
            sub = self._lists[pos]
            total += bisect_right(sub, value) - bisect_left(sub, value)
        _s(5)
        return total

    @_sut.traced
    def copy(self):
        _s(6)
        dup = SortedList(faults=self._faults)
        dup._lists = [list(sub) for sub in self._lists]
        dup._maxes = list(self._maxes)
        dup._len = self._len
        return dup

    @_sut.traced
    def union(self, other):
        """New list holding the items of both lists (a multiset merge)."""
        left = [v for sub in self._lists for v in sub]
        right = [v for sub in other._lists for v in sub]
        if not left:
            _b(45)
            return other.copy()
        if not right:
            _b(46)
            return self.copy()
        faulty = "union" in self._faults and len(left) + len(right) > UNION_FAULT_SIZE
        merged = []
        i = j = 0
        while i < len(left) and j < len(right):
            a, b = left[i], right[j]
            if a < b:
                _b(47)
                merged.append(a)
                i += 1
            elif b < a:
                _b(48)
                merged.append(b)
                j += 1
            elif faulty:
                _b(49)
                merged.append(a)
                i += 1
                j += 1
            else:
                _b(50)
                merged.append(a)
                merged.append(b)
                i += 1
                j += 1
        if i < len(left):
            _b(51)
            merged.extend(left[i:])
        if j < len(right):
            _b(52)
            merged.extend(right[j:])
        _s(7)
        out = SortedList(faults=self._faults)
        out._load_sorted(merged)
        return out

    @_sut.traced
    def _load_sorted(self, values):
        _s(8)
        self._lists = [values[i : i + LOAD] for i in range(0, len(values), LOAD)]
        self._maxes = [sub[-1] for sub in self._lists]
        self._len = len(values)

    @_sut.traced
    def index(self, value):
        maxes = self._maxes
        pos = bisect_left(maxes, value)
        if pos == len(maxes):
            _b(53)
            raise ValueError(f"{value!r} not in list")
        sub = self._lists[pos]
        idx = bisect_left(sub, value)
        if sub[idx] != value:
            _b(54)
            raise ValueError(f"{value!r} not in list")
        _b(55)
        return sum(len(s) for s in self._lists[:pos]) + idx

    @_sut.traced
    def clear(self):
        _s(9)
        self._lists = []
        self._maxes = []
        self._len = 0

    @_sut.traced
    def to_list(self):
        _s(10)
        return [v for sub in self._lists for v in sub]

    @_sut.traced
    def check(self):
        """Internal invariants: sorted sublists, accurate maxes and length."""
        if not self._lists:
            _b(56)
            return self._len == 0 and not self._maxes
        _b(57)
        flat = []
        for sub, mx in zip(self._lists, self._maxes):
            if not sub or sub[-1] != mx:
                _b(58)
                return False
            flat.extend(sub)
        _b(59)
        return flat == sorted(flat) and len(flat) == self._len


# -- harness ------------------------------------------------------------------


class _Cell:
    __slots__ = ("sl", "ref", "checks")

    def __init__(self, sl, ref=()):
        self.sl = sl
        self.ref = sorted(ref)
        self.checks = []


def _catch(fn, *args):
    try:
        return ("ok", fn(*args))
    except (IndexError, ValueError) as exc:
        return ("raise", type(exc).__name__)


def _check_reads(state):
    for cell in state.values("sl"):
        pending, cell.checks = cell.checks, []
        for got, expected in pending:
            assert got == expected


def _check_contents(state):
    for cell in state.values("sl"):
        assert cell.sl.to_list() == cell.ref
        assert cell.sl.check()


def _ref_index(ref, i):
    return ref[i]


def _ref_remove(ref, v):
    ref.remove(v)


def sortedlist_harness(faults: dict[str, bool] | None = None) -> Harness:
    faults = {f: bool((faults or {}).get(f, False)) for f in FAULTS}
    active = frozenset(f for f, on in faults.items() if on)

    def new():
        return _Cell(SortedList(faults=active))

    def add(cell, v):
        cell.sl.add(v)
        cell.ref.append(v)
        cell.ref.sort()

    def remove(cell, v):
        cell.checks.append((_catch(cell.sl.remove, v), _catch(_ref_remove, cell.ref, v)))

    def discard(cell, v):
        expected = v in cell.ref
        if expected:
            cell.ref.remove(v)
        cell.checks.append((cell.sl.discard(v), expected))

    def getitem(cell, i):
        # pool ints double as positions, shifted to include negatives
        idx = i - 5
        cell.checks.append((_catch(cell.sl.__getitem__, idx), _catch(_ref_index, cell.ref, idx)))

    def slice_read(cell, i, j):
        cell.checks.append((cell.sl.get_slice(i - 2, j), cell.ref[i - 2 : j]))

    def count(cell, v):
        cell.checks.append((cell.sl.count(v), cell.ref.count(v)))

    def contains(cell, v):
        cell.checks.append((v in cell.sl, v in cell.ref))

    def index(cell, v):
        cell.checks.append((_catch(cell.sl.index, v), _catch(cell.ref.index, v)))

    def length(cell):
        cell.checks.append((len(cell.sl), len(cell.ref)))

    def copy(cell):
        return _Cell(cell.sl.copy(), cell.ref)

    def union(a, b):
        return _Cell(a.sl.union(b.sl), a.ref + b.ref)

    def clear(cell):
        cell.sl.clear()
        cell.ref.clear()

    classes = [
        ActionClassSpec("int", VALUE_INIT, produces="int", domain=range(0, 16)),
        ActionClassSpec("sl_new", SUT_CALL, new, produces="sl"),
        ActionClassSpec("sl_add", SUT_CALL, add, consumes=("sl", "int")),
        ActionClassSpec("sl_remove", SUT_CALL, remove, consumes=("sl", "int")),
        ActionClassSpec("sl_discard", SUT_CALL, discard, consumes=("sl", "int")),
        ActionClassSpec("sl_getitem", SUT_CALL, getitem, consumes=("sl", "int")),
        ActionClassSpec("sl_slice", SUT_CALL, slice_read, consumes=("sl", "int", "int")),
        ActionClassSpec("sl_count", SUT_CALL, count, consumes=("sl", "int")),
        ActionClassSpec("sl_contains", SUT_CALL, contains, consumes=("sl", "int")),
        ActionClassSpec("sl_index", SUT_CALL, index, consumes=("sl", "int")),
        ActionClassSpec("sl_len", SUT_CALL, length, consumes=("sl",)),
        ActionClassSpec("sl_copy", SUT_CALL, copy, consumes=("sl",), produces="sl"),
        ActionClassSpec("sl_union", SUT_CALL, union, consumes=("sl", "sl"), produces="sl"),
        ActionClassSpec("sl_clear", SUT_CALL, clear, consumes=("sl",)),
    ]
    fid = "sortedlist.SortedList."
    return Harness(
        "sortedlist",
        [PoolSpec("int", 4), PoolSpec("sl", 3)],
        classes,
        [Property("reads_match", _check_reads), Property("contents_match", _check_contents)],
        function_loc=_sut.function_loc,
        probe_totals=(N_BRANCH, N_STMT),
        static_bindings={
            "sl_new": frozenset({fid + "__init__"}),
            "sl_add": frozenset({fid + "add"}),
            "sl_remove": frozenset({fid + "remove"}),
            "sl_discard": frozenset({fid + "discard"}),
            "sl_getitem": frozenset({fid + "__getitem__"}),
            "sl_slice": frozenset({fid + "get_slice"}),
            "sl_count": frozenset({fid + "count"}),
            "sl_contains": frozenset({fid + "__contains__"}),
            "sl_index": frozenset({fid + "index"}),
            "sl_len": frozenset({fid + "__len__"}),
            "sl_copy": frozenset({fid + "copy"}),
            "sl_union": frozenset({fid + "union"}),
            "sl_clear": frozenset({fid + "clear"}),
        },
        faults=faults,
    )
