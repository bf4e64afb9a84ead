"""AVL tree with a seeded rotation fault, plus its test harness.

With ``rotation_fault`` on, a left-right imbalance at a node of height
``FAULT_HEIGHT`` or more is fixed with a single right rotation instead of the
double rotation, which leaves the tree unbalanced.
"""

from __future__ import annotations

from ..coverage import branch as _b
from ..coverage import stmt as _s
from ..harness import SUT_CALL, VALUE_INIT, ActionClassSpec, Harness, PoolSpec, Property
from ..tracing import SutModule

_sut = SutModule("avl")

N_BRANCH = 26
N_STMT = 12
FAULT_HEIGHT = 4
FAULTS = ("rotation",)


class Node:
    __slots__ = ("key", "left", "right", "height")

    def __init__(self, key):
        self.key = key
        self.left = None
        self.right = None
        self.height = 1


def _h(node):
    return node.height if node is not None else 0


def _fix(node):
    node.height = max(_h(node.left), _h(node.right)) + 1


class AVLTree:
    @_sut.traced
    def __init__(self, rotation_fault=False):
        _s(0)
        self.root = None
        self.size = 0
        self._fault = rotation_fault

    @_sut.traced
    def insert(self, key):
        _s(1)
        self.root, added = self._insert(self.root, key)
        if added:
            _b(0)
            self.size += 1
        else:
            _b(1)

    @_sut.traced
    def _insert(self, node, key):
        if node is None:
            _b(2)
            return Node(key), True
        if key < node.key:
            _b(3)
            node.left, added = self._insert(node.left, key)
        elif key > node.key:
            _b(4)
            node.right, added = self._insert(node.right, key)
        else:
            # duplicate keys are ignored
            _b(5)
            return node, False
        if not added:
            _b(6)
            return node, False
        return self._rebalance(node), True

    @_sut.traced
    def _rebalance(self, node):
        _fix(node)
        balance = _h(node.left) - _h(node.right)
        if balance > 1:
            _s(2)
            if _h(node.left.left) >= _h(node.left.right):
                _b(7)
                return self._rotate_right(node)
            if self._fault and node.height >= FAULT_HEIGHT:
                _b(8)
                return self._rotate_right(node)
            _b(9)
            node.left = self._rotate_left(node.left)
            return self._rotate_right(node)
        if balance < -1:
            _s(3)
            if _h(node.right.right) >= _h(node.right.left):
                _b(10)
                return self._rotate_left(node)
            _b(11)
            node.right = self._rotate_right(node.right)
            return self._rotate_left(node)
        _b(12)
        return node

    @_sut.traced
    def _rotate_left(self, node):
        _s(4)
        pivot = node.right
        node.right = pivot.left
        pivot.left = node
        _fix(node)
        _fix(pivot)
        return pivot

    @_sut.traced
    def _rotate_right(self, node):
        _s(5)
        pivot = node.left
        node.left = pivot.right
        pivot.right = node
        _fix(node)
        _fix(pivot)
        return pivot

    @_sut.traced
    def delete(self, key):
        _s(6)
        self.root, removed = self._delete(self.root, key)
        if removed:
            _b(13)
            self.size -= 1
        else:
            _b(14)

    @_sut.traced
    def _delete(self, node, key):
        if node is None:
            _b(15)
            return None, False
        if key < node.key:
            _b(16)
            node.left, removed = self._delete(node.left, key)
        elif key > node.key:
            _b(17)
            node.right, removed = self._delete(node.right, key)
        else:
            removed = True
            if node.left is None:
                _b(18)
                return node.right, True
            if node.right is None:
                _b(19)
                return node.left, True
            # two children: pull up the in-order successor
            _b(20)
            succ = self._min_node(node.right)
            node.key = succ.key
            node.right, _ = self._delete(node.right, succ.key)
        if not removed:
            _b(21)
            return node, False
        return self._rebalance(node), True

    @_sut.traced
    def _min_node(self, node):
        _s(7)
        while node.left is not None:
            node = node.left
        return node

    @_sut.traced
    def keys(self):
        _s(8)
        out = []
        stack = []
        node = self.root
        while stack or node is not None:
            if node is not None:
                stack.append(node)
                node = node.left
            else:
                node = stack.pop()
                out.append(node.key)
                node = node.right
        return out

    @_sut.traced
    def display(self):
        if self.root is None:
            _b(22)
            return "()"
        _b(23)
        return self._render(self.root)

    @_sut.traced
    def _render(self, node):
        if node is None:
            return "."
        _s(9)
        return f"({self._render(node.left)} {node.key} {self._render(node.right)})"

    @_sut.traced
    def check_balanced(self):
        _s(10)
        return self._balanced_height(self.root) >= 0

    @_sut.traced
    def _balanced_height(self, node):
        # -1 marks an unbalanced subtree
        if node is None:
            _b(24)
            return 0
        lh = self._balanced_height(node.left)
        rh = self._balanced_height(node.right)
        if lh < 0 or rh < 0 or abs(lh - rh) > 1:
            _b(25)
            return -1
        _s(11)
        return max(lh, rh) + 1


# -- harness ------------------------------------------------------------------


class _Cell:
    __slots__ = ("tree", "ref")

    def __init__(self, tree):
        self.tree = tree
        self.ref = set()


def _check_balanced(state):
    for cell in state.values("avl"):
        assert cell.tree.check_balanced()


def _check_inorder(state):
    for cell in state.values("avl"):
        assert cell.tree.keys() == sorted(cell.ref)


def avl_harness(faults: dict[str, bool] | None = None) -> Harness:
    faults = {f: bool((faults or {}).get(f, False)) for f in FAULTS}
    fault_on = faults["rotation"]

    def new():
        return _Cell(AVLTree(rotation_fault=fault_on))

    def insert(cell, key):
        cell.tree.insert(key)
        cell.ref.add(key)

    def delete(cell, key):
        cell.tree.delete(key)
        cell.ref.discard(key)

    def display(cell):
        cell.tree.display()

    classes = [
        ActionClassSpec("int", VALUE_INIT, produces="int", domain=range(1, 21)),
        ActionClassSpec("avl_new", SUT_CALL, new, produces="avl"),
        ActionClassSpec("avl_insert", SUT_CALL, insert, consumes=("avl", "int")),
        ActionClassSpec("avl_delete", SUT_CALL, delete, consumes=("avl", "int")),
        ActionClassSpec("avl_display", SUT_CALL, display, consumes=("avl",)),
    ]
    return Harness(
        "avl",
        [PoolSpec("int", 4), PoolSpec("avl", 3)],
        classes,
        [Property("check_balanced", _check_balanced), Property("inorder_matches", _check_inorder)],
        function_loc=_sut.function_loc,
        probe_totals=(N_BRANCH, N_STMT),
        static_bindings={
            "avl_new": frozenset({"avl.AVLTree.__init__"}),
            "avl_insert": frozenset({"avl.AVLTree.insert"}),
            "avl_delete": frozenset({"avl.AVLTree.delete"}),
            "avl_display": frozenset({"avl.AVLTree.display"}),
        },
        faults=faults,
    )
