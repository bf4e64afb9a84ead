"""Arithmetic expression parser/evaluator over token streams, plus its harness.

The harness builds token streams in pools with zero-LOC compose classes; a
single class hands a stream to :func:`parse_eval`.  Results, including the
error category for malformed or undefined expressions, are compared against
:func:`reference_eval`, an independent recursive-descent evaluator.

Grammar (``^`` is right-associative and binds tighter than unary minus)::

    expr  := term (("+" | "-") term)*
    term  := unary (("*" | "/" | "%") unary)*
    unary := "-" unary | power
    power := atom ("^" unary)?
    atom  := INT | "(" expr ")"

``/`` and ``%`` are floor division and modulo.  Evaluation errors are
``zero-division``, ``negative-exponent`` (or an exponent above
``MAX_EXPONENT``) and ``overflow`` (magnitude above ``LIMIT``).
"""

from __future__ import annotations

from ..coverage import branch as _b
from ..coverage import stmt as _s
from ..harness import SUT_CALL, VALUE_COMPOSE, VALUE_INIT, ActionClassSpec, Harness, PoolSpec, Property
from ..tracing import SutModule

_sut = SutModule("exprparser")

N_BRANCH = 34
N_STMT = 5
FAULTS: tuple[str, ...] = ()

LIMIT = 10**60
MAX_EXPONENT = 64
MAX_TOKENS = 48

BINARY = {"+": (1, "left"), "-": (1, "left"), "*": (2, "left"), "/": (2, "left"), "%": (2, "left"), "^": (4, "right")}
UNARY_PREC = 3

SYNTAX = "syntax"
ZERO_DIVISION = "zero-division"
NEGATIVE_EXPONENT = "negative-exponent"
OVERFLOW = "overflow"


class ExprError(Exception):
    def __init__(self, category: str, detail: str = ""):
        super().__init__(f"{category}: {detail}" if detail else category)
        self.category = category


def _check(value):
    if abs(value) > LIMIT:
        raise ExprError(OVERFLOW)
    return value


def _apply(op, a, b):
    if op == "+":
        return _check(a + b)
    if op == "-":
        return _check(a - b)
    if op == "*":
        return _check(a * b)
    if op in "/%":
        if b == 0:
            raise ExprError(ZERO_DIVISION)
        return a // b if op == "/" else a % b
    if b < 0 or b > MAX_EXPONENT:
        raise ExprError(NEGATIVE_EXPONENT if b < 0 else OVERFLOW, "exponent")
    return _check(a**b)


class Parser:
    """Precedence-climbing parser producing nested tuples."""

    @_sut.traced
    def __init__(self, tokens):
        _s(0)
        self.tokens = list(tokens)
        self.pos = 0

    @_sut.traced
    def parse(self):
        tokens = self.tokens
        if not tokens:
            _b(0)
            raise ExprError(SYNTAX, "empty expression")
        if len(tokens) == 1:
            # a lone literal needs no machinery
            if isinstance(tokens[0], int):
                _b(1)
                return ("num", tokens[0])
            _b(2)
            raise ExprError(SYNTAX, f"unexpected {tokens[0]!r}")
        if len(tokens) > MAX_TOKENS:
            _b(3)
            raise ExprError(SYNTAX, "expression too long")
        depth = 0
        for tok in tokens:
            if tok == "(":
                depth += 1
            elif tok == ")":
                depth -= 1
                if depth < 0:
                    _b(4)
                    raise ExprError(SYNTAX, "unbalanced ')'")
        if depth:
            _b(5)
            raise ExprError(SYNTAX, "unbalanced '('")
        node = self._expression(0)
        if self.pos != len(tokens):
            _b(6)
            raise ExprError(SYNTAX, f"trailing {tokens[self.pos]!r}")
        _s(1)
        return node

    def _peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    @_sut.traced
    def _expression(self, min_prec):
        left = self._prefix()
        while True:
            tok = self._peek()
            if tok is None:
                _b(7)
                return left
            if tok == ")":
                _b(8)
                return left
            if not isinstance(tok, str) or tok not in BINARY:
                _b(9)
                raise ExprError(SYNTAX, f"expected operator, got {tok!r}")
            prec, assoc = BINARY[tok]
            if prec < min_prec:
                _b(10)
                return left
            self.pos += 1
            if assoc == "right":
                # the right operand of ^ is a unary-level expression
                _b(11)
                right = self._unary_operand()
            else:
                _b(12)
                right = self._expression(prec + 1)
            left = ("bin", tok, left, right)

    @_sut.traced
    def _unary_operand(self):
        tok = self._peek()
        if tok == "-":
            _b(13)
            self.pos += 1
            return ("neg", self._unary_operand())
        _b(14)
        return self._expression(BINARY["^"][0])

    @_sut.traced
    def _prefix(self):
        tok = self._peek()
        if tok is None:
            _b(15)
            raise ExprError(SYNTAX, "unexpected end")
        self.pos += 1
        if isinstance(tok, int):
            _b(16)
            return ("num", tok)
        if tok == "(":
            inner = self._expression(0)
            if self._peek() != ")":
                _b(17)
                raise ExprError(SYNTAX, "missing ')'")
            _b(18)
            self.pos += 1
            return inner
        if tok == "-":
            # unary minus covers everything binding tighter than itself
            _b(19)
            operand = self._expression(UNARY_PREC + 1)
            return ("neg", operand)
        _b(20)
        raise ExprError(SYNTAX, f"unexpected {tok!r}")


@_sut.traced
def evaluate(node):
    kind = node[0]
    if kind == "num":
        _b(21)
        return node[1]
    if kind == "neg":
        _b(22)
        return -evaluate(node[1])
    _, op, lhs, rhs = node
    a = evaluate(lhs)
    b = evaluate(rhs)
    if op == "+":
        _b(23)
    elif op == "-":
        _b(24)
    elif op == "*":
        _b(25)
    elif op in "/%":
        if b == 0:
            _b(26)
        else:
            _b(27)
    elif b < 0:
        _b(28)
    elif b > MAX_EXPONENT:
        _b(29)
    else:
        _b(30)
    result = _apply(op, a, b)
    if abs(result) > LIMIT // 2:
        _b(31)
    else:
        _b(32)
    return result


@_sut.traced
def parse_eval(tokens):
    """Value of the expression, or raise ExprError with a category."""
    if len(tokens) == 1 and isinstance(tokens[0], int):
        # trivial input: skip the parser entirely
        _b(33)
        return tokens[0]
    _s(2)
    tree = Parser(tokens).parse()
    _s(3)
    value = evaluate(tree)
    _s(4)
    return value


# -- reference ----------------------------------------------------------------


class _Err:
    __slots__ = ("category",)

    def __init__(self, category):
        self.category = category


def _ref_apply(op, a, b):
    if isinstance(a, _Err):
        return a
    if isinstance(b, _Err):
        return b
    try:
        return _apply(op, a, b)
    except ExprError as exc:
        return _Err(exc.category)


def reference_eval(tokens) -> tuple[str, object]:
    """``("ok", value)`` or ``("error", category)`` by direct recursive descent.

    Evaluation errors travel as values so that a later syntax error still
    takes precedence, mirroring parse-then-evaluate.
    """
    toks = list(tokens)
    if len(toks) > MAX_TOKENS:
        return ("error", SYNTAX)
    pos = 0

    class Syntax(Exception):
        pass

    def peek():
        return toks[pos] if pos < len(toks) else None

    def take():
        nonlocal pos
        pos += 1
        return toks[pos - 1]

    def expr():
        value = term()
        while peek() in ("+", "-"):
            value = _ref_apply(take(), value, term())
        return value

    def term():
        value = unary()
        while peek() in ("*", "/", "%"):
            value = _ref_apply(take(), value, unary())
        return value

    def unary():
        if peek() == "-":
            take()
            inner = unary()
            return inner if isinstance(inner, _Err) else -inner
        return power()

    def power():
        base = atom()
        if peek() == "^":
            take()
            return _ref_apply("^", base, unary())
        return base

    def atom():
        tok = peek()
        if isinstance(tok, int):
            take()
            return tok
        if tok == "(":
            take()
            value = expr()
            if peek() != ")":
                raise Syntax
            take()
            return value
        raise Syntax

    try:
        value = expr()
        if pos != len(toks):
            raise Syntax
    except Syntax:
        return ("error", SYNTAX)
    if isinstance(value, _Err):
        return ("error", value.category)
    return ("ok", value)


def outcome(tokens) -> tuple[str, object]:
    """parse_eval's result in the same shape as :func:`reference_eval`."""
    try:
        return ("ok", parse_eval(tokens))
    except ExprError as exc:
        return ("error", exc.category)


# -- harness ------------------------------------------------------------------


def _check_matches(state):
    for got, expected in state.values("result"):
        assert got == expected


OPERATORS = ("+", "-", "*", "/", "%", "^")


def exprparser_harness(faults: dict[str, bool] | None = None) -> Harness:
    if faults:
        raise ValueError("exprparser has no seeded faults")

    def trim(tokens):
        return tokens[:MAX_TOKENS + 4]

    def parse_call(tokens):
        return outcome(tokens), reference_eval(tokens)

    specs = [
        ActionClassSpec("num", VALUE_INIT, produces="num", domain=tuple(range(10))),
        ActionClassSpec("op", VALUE_INIT, produces="op", domain=OPERATORS),
        ActionClassSpec("empty", VALUE_INIT, produces="expr", domain=((),), executor=lambda _: ()),
        ActionClassSpec("literal", VALUE_COMPOSE, lambda n: (n,), consumes=("num",), produces="expr"),
        ActionClassSpec(
            "binary", VALUE_COMPOSE, lambda a, op, b: trim(a + (op,) + b),
            consumes=("expr", "op", "expr"), produces="expr",
        ),
        ActionClassSpec("paren", VALUE_COMPOSE, lambda e: trim(("(",) + e + (")",)), consumes=("expr",), produces="expr"),
        ActionClassSpec("negate", VALUE_COMPOSE, lambda e: trim(("-",) + e), consumes=("expr",), produces="expr"),
        ActionClassSpec("dangling", VALUE_COMPOSE, lambda e, op: trim(e + (op,)), consumes=("expr", "op"), produces="expr"),
        ActionClassSpec("parse_eval", SUT_CALL, parse_call, consumes=("expr",), produces="result"),
    ]
    return Harness(
        "exprparser",
        [PoolSpec("num", 3), PoolSpec("op", 3), PoolSpec("expr", 4), PoolSpec("result", 1)],
        specs,
        [Property("matches_reference", _check_matches)],
        function_loc=_sut.function_loc,
        probe_totals=(N_BRANCH, N_STMT),
        static_bindings={"parse_eval": frozenset({"exprparser.parse_eval"})},
        faults={},
    )
