"""A small JSON-like codec and a deliberately LOC-adverse harness for it.

Most action classes only build values in pools and never enter codec code,
while the round-trip property exercises ``encode``/``decode`` on every pooled
value after each action.  Coverage therefore depends on value diversity, which
a LOC-biased strategy starves by pushing selection mass onto the two
codec-calling classes.  The codec has no seeded fault.
"""

from __future__ import annotations

from ..coverage import branch as _b
from ..coverage import stmt as _s
from ..harness import SUT_CALL, VALUE_COMPOSE, VALUE_INIT, ActionClassSpec, Harness, PoolSpec, Property
from ..tracing import SutModule

_sut = SutModule("codec")

N_BRANCH = 55
N_STMT = 3
FAULTS: tuple[str, ...] = ()

SORT_KEYS = 1
INDENT = 2
ENSURE_ASCII = 4

STRICT = 1

_ESCAPES = {'"': '\\"', "\\": "\\\\", "\n": "\\n", "\r": "\\r", "\t": "\\t", "\b": "\\b", "\f": "\\f"}
_UNESCAPES = {'"': '"', "\\": "\\", "/": "/", "n": "\n", "r": "\r", "t": "\t", "b": "\b", "f": "\f"}


class DecodeError(ValueError):
    pass


@_sut.traced
def encode(value, flags=0):
    """Serialize ``value``; ``flags`` combines SORT_KEYS, INDENT and ENSURE_ASCII."""
    _s(0)
    out: list[str] = []
    _encode_value(value, flags, 0, out)
    return "".join(out)


@_sut.traced
def _encode_value(value, flags, depth, out):
    if value is None:
        _b(0)
        out.append("null")
    elif value is True:
        _b(1)
        out.append("true")
    elif value is False:
        _b(2)
        out.append("false")
    elif isinstance(value, str):
        _b(3)
        _encode_str(value, flags, out)
    elif isinstance(value, int):
        _b(4)
        out.append(str(value))
    elif isinstance(value, float):
        _b(5)
        _encode_float(value, out)
    elif isinstance(value, list):
        _b(6)
        _encode_list(value, flags, depth, out)
    elif isinstance(value, dict):
        _b(7)
        _encode_dict(value, flags, depth, out)
    else:
        raise TypeError(f"cannot encode {type(value).__name__}")


@_sut.traced
def _encode_float(value, out):
    if value != value or value in (float("inf"), float("-inf")):
        raise ValueError("non-finite float")
    text = repr(value)
    if "e" in text or "." in text:
        _b(8)
    else:
        _b(9)
        text += ".0"
    out.append(text)


@_sut.traced
def _encode_str(text, flags, out):
    out.append('"')
    for ch in text:
        if ch in _ESCAPES:
            _b(10)
            out.append(_ESCAPES[ch])
        elif ord(ch) < 0x20:
            _b(11)
            out.append(f"\\u{ord(ch):04x}")
        elif ord(ch) < 0x7F or not flags & ENSURE_ASCII:
            _b(12)
            out.append(ch)
        elif ord(ch) > 0xFFFF:
            # astral characters become a surrogate pair
            _b(13)
            code = ord(ch) - 0x10000
            out.append(f"\\u{0xD800 | (code >> 10):04x}\\u{0xDC00 | (code & 0x3FF):04x}")
        else:
            _b(14)
            out.append(f"\\u{ord(ch):04x}")
    out.append('"')


@_sut.traced
def _newline(flags, depth, out):
    if flags & INDENT:
        _b(15)
        out.append("\n" + "  " * depth)
    else:
        _b(16)


@_sut.traced
def _encode_list(items, flags, depth, out):
    if not items:
        _b(17)
        out.append("[]")
        return
    _b(18)
    out.append("[")
    for i, item in enumerate(items):
        if i:
            _b(19)
            out.append(",")
        _newline(flags, depth + 1, out)
        _encode_value(item, flags, depth + 1, out)
    _newline(flags, depth, out)
    out.append("]")


@_sut.traced
def _encode_dict(mapping, flags, depth, out):
    if not mapping:
        _b(20)
        out.append("{}")
        return
    keys = list(mapping)
    if flags & SORT_KEYS:
        _b(21)
        keys.sort()
    else:
        _b(22)
    out.append("{")
    for i, key in enumerate(keys):
        if not isinstance(key, str):
            raise TypeError("keys must be strings")
        if i:
            _b(23)
            out.append(",")
        _newline(flags, depth + 1, out)
        _encode_str(key, flags, out)
        out.append(": " if flags & INDENT else ":")
        _encode_value(mapping[key], flags, depth + 1, out)
    _newline(flags, depth, out)
    out.append("}")


@_sut.traced
def decode(text, flags=0):
    """Parse ``text``; with STRICT, raw control characters inside strings are rejected."""
    pos = _skip_ws(text, 0)
    if pos == len(text):
        _b(24)
        raise DecodeError("empty document")
    value, pos = _parse_value(text, pos, flags)
    pos = _skip_ws(text, pos)
    if pos != len(text):
        _b(25)
        raise DecodeError(f"trailing data at {pos}")
    _s(1)
    return value


@_sut.traced
def _skip_ws(text, pos):
    while pos < len(text) and text[pos] in " \t\n\r":
        pos += 1
    return pos


@_sut.traced
def _parse_value(text, pos, flags):
    if pos >= len(text):
        raise DecodeError("unexpected end")
    ch = text[pos]
    if ch == '"':
        _b(26)
        return _parse_string(text, pos + 1, flags)
    if ch == "[":
        _b(27)
        return _parse_array(text, pos + 1, flags)
    if ch == "{":
        _b(28)
        return _parse_object(text, pos + 1, flags)
    if ch == "-" or ch.isdigit():
        _b(29)
        return _parse_number(text, pos)
    for word, value in (("null", None), ("true", True), ("false", False)):
        if text.startswith(word, pos):
            _b(30)
            return value, pos + len(word)
    raise DecodeError(f"unexpected {ch!r} at {pos}")


@_sut.traced
def _parse_string(text, pos, flags):
    chunks = []
    while True:
        end = pos
        while end < len(text) and text[end] not in '"\\':
            if flags & STRICT and ord(text[end]) < 0x20:
                raise DecodeError("control character in string")
            end += 1
        chunks.append(text[pos:end])
        if end >= len(text):
            raise DecodeError("unterminated string")
        if text[end] == '"':
            _b(31)
            return "".join(chunks), end + 1
        esc = text[end + 1 : end + 2]
        if esc in _UNESCAPES:
            _b(32)
            chunks.append(_UNESCAPES[esc])
            pos = end + 2
            continue
        if esc != "u":
            raise DecodeError(f"bad escape at {end}")
        code = _hex4(text, end + 2)
        pos = end + 6
        if 0xD800 <= code < 0xDC00 and text.startswith("\\u", pos):
            # high surrogate: combine with the following low surrogate
            low = _hex4(text, pos + 2)
            if 0xDC00 <= low < 0xE000:
                _b(33)
                code = 0x10000 + ((code - 0xD800) << 10) + (low - 0xDC00)
                pos += 6
            else:
                _b(34)
        else:
            _b(35)
        chunks.append(chr(code))


@_sut.traced
def _hex4(text, pos):
    digits = text[pos : pos + 4]
    if len(digits) != 4:
        raise DecodeError("truncated \\u escape")
    try:
        return int(digits, 16)
    except ValueError:
        raise DecodeError("bad \\u escape") from None


@_sut.traced
def _parse_number(text, pos):
    start = pos
    if text[pos] == "-":
        _b(36)
        pos += 1
    else:
        _b(37)
    while pos < len(text) and text[pos].isdigit():
        pos += 1
    is_float = False
    if pos < len(text) and text[pos] == ".":
        _b(38)
        is_float = True
        pos += 1
        while pos < len(text) and text[pos].isdigit():
            pos += 1
    if pos < len(text) and text[pos] in "eE":
        _b(39)
        is_float = True
        pos += 1
        if pos < len(text) and text[pos] in "+-":
            _b(40)
            pos += 1
        while pos < len(text) and text[pos].isdigit():
            pos += 1
    token = text[start:pos]
    if is_float:
        _b(41)
        return float(token), pos
    _b(42)
    return int(token), pos


@_sut.traced
def _parse_array(text, pos, flags):
    items = []
    pos = _skip_ws(text, pos)
    if text.startswith("]", pos):
        _b(43)
        return items, pos + 1
    while True:
        value, pos = _parse_value(text, _skip_ws(text, pos), flags)
        items.append(value)
        pos = _skip_ws(text, pos)
        if text.startswith(",", pos):
            _b(44)
            pos += 1
        elif text.startswith("]", pos):
            _b(45)
            return items, pos + 1
        else:
            raise DecodeError(f"expected , or ] at {pos}")


@_sut.traced
def _parse_object(text, pos, flags):
    obj = {}
    pos = _skip_ws(text, pos)
    if text.startswith("}", pos):
        _b(46)
        return obj, pos + 1
    while True:
        pos = _skip_ws(text, pos)
        if not text.startswith('"', pos):
            raise DecodeError(f"expected key at {pos}")
        key, pos = _parse_string(text, pos + 1, flags)
        pos = _skip_ws(text, pos)
        if not text.startswith(":", pos):
            raise DecodeError(f"expected : at {pos}")
        value, pos = _parse_value(text, _skip_ws(text, pos + 1), flags)
        if key in obj:
            # later duplicates win, as in most JSON readers
            _b(47)
        else:
            _b(48)
        obj[key] = value
        pos = _skip_ws(text, pos)
        if text.startswith(",", pos):
            _b(49)
            pos += 1
        elif text.startswith("}", pos):
            _b(50)
            return obj, pos + 1
        else:
            raise DecodeError(f"expected , or }} at {pos}")


@_sut.traced
def round_trip(value, flags=0):
    """``decode(encode(value))`` with decode strictness taken from the flags."""
    text = encode(value, flags)
    if flags & INDENT:
        _b(51)
    else:
        _b(52)
    result = decode(text, STRICT if flags & SORT_KEYS else 0)
    if result == value:
        _b(53)
    else:
        _b(54)
    _s(2)
    return result


# -- harness ------------------------------------------------------------------

# composed values stop growing past this many nodes, keeping the property cheap
MAX_NODES = 40


def _nodes(value):
    if isinstance(value, list):
        return 1 + sum(_nodes(v) for v in value)
    if isinstance(value, dict):
        return 1 + sum(_nodes(v) for v in value.values())
    return 1


def _bounded(result, fallback):
    return result if _nodes(result) <= MAX_NODES else fallback


class _Encoded:
    __slots__ = ("text", "original", "flags")

    def __init__(self, text, original, flags):
        self.text = text
        self.original = original
        self.flags = flags


def _check_round_trip(state):
    for value in state.values("val"):
        assert round_trip(value) == value
    for enc in state.values("text"):
        assert decode(enc.text) == enc.original


INTS = (0, 1, -1, 7, -42, 255, 2**31, -(2**63), 10**20)
FLOATS = (0.0, 0.5, -2.25, 3.0, 1e-7, 6.02e23, -1e300, 0.1)
STRINGS = ("", "a", "hello world", 'say "hi"', "back\\slash", "tab\there", "line\nbreak", "\x01\x1f", "café",
           "☃ snow", "\U0001f600", "/slash")
CONSTS = (None, True, False)
KEYS = ("a", "b", "key", "", "é", "\n")


def codec_harness(faults: dict[str, bool] | None = None) -> Harness:
    if faults:
        raise ValueError("codec has no seeded faults")

    def list_wrap(v):
        return [v]

    def list_append(xs, v):
        base = xs if isinstance(xs, list) else [xs]
        return _bounded(base + [v], xs)

    def pair(a, b):
        return _bounded([a, b], a)

    def map_wrap(k, v):
        return {k: v}

    def map_put(m, k, v):
        base = dict(m) if isinstance(m, dict) else {}
        base[k] = v
        return _bounded(base, m)

    def map_merge(a, b):
        if isinstance(a, dict) and isinstance(b, dict):
            return _bounded({**a, **b}, a)
        return a

    def str_concat(a, b):
        if isinstance(a, str) and isinstance(b, str):
            return (a + b)[:32]
        return a

    def encode_call(v, flags):
        return _Encoded(encode(v, flags), v, flags)

    def decode_call(enc, flags):
        got = decode(enc.text, flags & STRICT)
        if got != enc.original:
            raise AssertionError("decode disagrees with the encoded value")

    classes = [
        ActionClassSpec("int_lit", VALUE_INIT, produces="val", domain=INTS),
        ActionClassSpec("float_lit", VALUE_INIT, produces="val", domain=FLOATS),
        ActionClassSpec("str_lit", VALUE_INIT, produces="val", domain=STRINGS),
        ActionClassSpec("const_lit", VALUE_INIT, produces="val", domain=CONSTS),
        ActionClassSpec("empty_list", VALUE_INIT, produces="val", domain=((),), executor=lambda _: []),
        ActionClassSpec("empty_map", VALUE_INIT, produces="val", domain=((),), executor=lambda _: {}),
        ActionClassSpec("key", VALUE_INIT, produces="key", domain=KEYS),
        ActionClassSpec("flags", VALUE_INIT, produces="flags", domain=tuple(range(8))),
        ActionClassSpec("list_wrap", VALUE_COMPOSE, list_wrap, consumes=("val",), produces="val"),
        ActionClassSpec("list_append", VALUE_COMPOSE, list_append, consumes=("val", "val"), produces="val"),
        ActionClassSpec("pair", VALUE_COMPOSE, pair, consumes=("val", "val"), produces="val"),
        ActionClassSpec("map_wrap", VALUE_COMPOSE, map_wrap, consumes=("key", "val"), produces="val"),
        ActionClassSpec("map_put", VALUE_COMPOSE, map_put, consumes=("val", "key", "val"), produces="val"),
        ActionClassSpec("map_merge", VALUE_COMPOSE, map_merge, consumes=("val", "val"), produces="val"),
        ActionClassSpec("str_concat", VALUE_COMPOSE, str_concat, consumes=("val", "val"), produces="val"),
        ActionClassSpec("encode", SUT_CALL, encode_call, consumes=("val", "flags"), produces="text"),
        ActionClassSpec("decode", SUT_CALL, decode_call, consumes=("text", "flags")),
    ]
    return Harness(
        "codec",
        [PoolSpec("val", 4), PoolSpec("key", 2), PoolSpec("flags", 2), PoolSpec("text", 2)],
        classes,
        [Property("round_trip", _check_round_trip)],
        function_loc=_sut.function_loc,
        probe_totals=(N_BRANCH, N_STMT),
        static_bindings={
            "encode": frozenset({"codec.encode"}),
            "decode": frozenset({"codec.decode"}),
        },
        faults={},
    )
