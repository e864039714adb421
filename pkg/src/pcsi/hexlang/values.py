"""Awk value semantics: numbers, strings, numeric strings, the uninitialized
value, and the conversions between them.

Strings are Python ``str`` holding one code point per byte (latin-1), so
``len`` and slicing count bytes exactly as the canonical S-expression
encoding requires.
"""

from __future__ import annotations

import math
import re


class Uninit(str):
    """The value of a variable never assigned: "" as a string, 0 as a number."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "UNINIT"


UNINIT = Uninit("")


class StrNum(str):
    """A string from outside the program text that looks like a number
    (``split`` pieces); compares numerically against numbers."""

    __slots__ = ("num",)


class HexArray(dict):
    """Associative array; keys are always strings."""

    __slots__ = ()


# leading numeric prefix, as strtod would consume it
_NUM_PREFIX = re.compile(r"[ \t\n\r\f\v]*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)")
_LOOKS_NUMERIC = re.compile(r"[ \t\n\r\f\v]*[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?[ \t\n\r\f\v]*\Z")


def str_to_num(s: str) -> float:
    m = _NUM_PREFIX.match(s)
    if not m:
        return 0.0
    return float(m.group(1))


def make_strnum(s: str) -> str:
    if _LOOKS_NUMERIC.match(s):
        v = StrNum(s)
        v.num = float(s)
        return v
    return s


def to_num(v) -> float:
    if type(v) is float:
        return v
    if type(v) is StrNum:
        return v.num
    if type(v) is Uninit:
        return 0.0
    if isinstance(v, HexArray):
        raise HexTypeError("attempt to use array in a scalar context")
    return str_to_num(v)


def num_to_str(x: float, fmt: str) -> str:
    if math.isfinite(x) and x == int(x) and abs(x) < 1e16:
        return "%d" % x
    if math.isnan(x):
        return "-nan" if math.copysign(1.0, x) < 0 else "nan"
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    try:
        return fmt % x
    except (TypeError, ValueError):
        return "%.6g" % x


def to_str(v, convfmt: str = "%.6g") -> str:
    if type(v) is float:
        return num_to_str(v, convfmt)
    if isinstance(v, HexArray):
        raise HexTypeError("attempt to use array in a scalar context")
    return v


def to_bool(v) -> bool:
    t = type(v)
    if t is float:
        return v != 0.0
    if t is StrNum:
        return v.num != 0.0
    if t is Uninit:
        return False
    if isinstance(v, HexArray):
        raise HexTypeError("attempt to use array in a scalar context")
    return v != ""


def _numeric_like(v) -> bool:
    t = type(v)
    return t is float or t is StrNum or t is Uninit


def compare(a, b, convfmt: str = "%.6g") -> int:
    """Three-way comparison with Awk's numeric/string choice."""
    if _numeric_like(a) and _numeric_like(b):
        x = to_num(a)
        y = to_num(b)
    else:
        x = to_str(a, convfmt)
        y = to_str(b, convfmt)
    return (x > y) - (x < y)


class HexTypeError(Exception):
    pass
