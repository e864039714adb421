"""Rivest S-expressions: canonical bytes, display text, and content hashes.

Values are plain Python objects: an atom is ``bytes`` and a list is a
``list`` of values.  Tuples are accepted wherever a value is consumed, but
the parsers always produce lists so that equality is structural.
"""

from __future__ import annotations

import base64
import binascii
import hashlib
from typing import Iterator, Sequence, Union

SExpr = Union[bytes, list]

MAX_ATOM_LENGTH = 2**31 - 1
DIGEST_SIZE = 32

# Rivest token alphabet; tokens may not start with a digit.
_TOKEN_START = frozenset(b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ-./_:*+=")
_TOKEN_CHARS = _TOKEN_START | frozenset(b"0123456789")
_DISPLAY_ESCAPES = {ord('"'): '\\"', ord("\\"): "\\\\", ord("\n"): "\\n", ord("\t"): "\\t"}
_UNESCAPE = {ord('"'): ord('"'), ord("\\"): ord("\\"), ord("n"): ord("\n"), ord("t"): ord("\t")}
_DELIMS = frozenset(b'()"| \t\r\n\f\v')


class SExprError(ValueError):
    """Malformed canonical or display input; ``offset`` is the byte position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class Digest(bytes):
    """A 32-byte content hash.  Displays as ``|base64|``."""

    def __new__(cls, raw: bytes):
        raw = bytes(raw)
        if len(raw) != DIGEST_SIZE:
            raise ValueError(f"digest must be {DIGEST_SIZE} bytes, got {len(raw)}")
        return super().__new__(cls, raw)

    @classmethod
    def from_hex(cls, text: str) -> "Digest":
        try:
            return cls(bytes.fromhex(text))
        except ValueError as exc:
            raise ValueError(f"bad hex digest {text!r}: {exc}") from None

    @classmethod
    def from_display(cls, text: str) -> "Digest":
        text = text.strip()
        if len(text) < 2 or text[0] != "|" or text[-1] != "|":
            raise ValueError(f"digest display form must be |base64|: {text!r}")
        try:
            raw = base64.b64decode(text[1:-1], validate=True)
        except binascii.Error as exc:
            raise ValueError(f"bad base64 in digest {text!r}: {exc}") from None
        return cls(raw)

    @classmethod
    def parse(cls, text: str) -> "Digest":
        """Accept either 64 hex digits or the ``|base64|`` form."""
        text = text.strip()
        if text.startswith("|"):
            return cls.from_display(text)
        return cls.from_hex(text)

    @property
    def b64(self) -> str:
        return base64.b64encode(self).decode("ascii")

    def display(self) -> str:
        return f"|{self.b64}|"

    def __repr__(self) -> str:
        return f"Digest({self.display()})"


def is_atom(v) -> bool:
    return isinstance(v, (bytes, bytearray))


def atom(x: Union[str, bytes]) -> bytes:
    """Coerce text (UTF-8) or bytes into an atom."""
    if isinstance(x, str):
        return x.encode("utf-8")
    return bytes(x)


# -- canonical form --------------------------------------------------------

def encode_canonical(v: SExpr) -> bytes:
    out = bytearray()
    # explicit stack so very deep values do not hit the recursion limit
    stack = [(v, False)]
    while stack:
        item, closing = stack.pop()
        if closing:
            out += b")"
        elif isinstance(item, (bytes, bytearray)):
            out += b"%d:" % len(item)
            out += item
        elif isinstance(item, (list, tuple)):
            out += b"("
            stack.append((None, True))
            for child in reversed(item):
                stack.append((child, False))
        else:
            raise TypeError(f"not an S-expression value: {type(item).__name__}")
    return bytes(out)


def _parse_length(b: bytes, i: int) -> tuple[int, int]:
    start = i
    n = len(b)
    while i < n and 0x30 <= b[i] <= 0x39:
        i += 1
    digits = b[start:i]
    if not digits:
        raise SExprError("expected length prefix", start)
    if len(digits) > 1 and digits[0] == 0x30:
        raise SExprError("leading zero in length prefix", start)
    if len(digits) > 10 or int(digits) > MAX_ATOM_LENGTH:
        raise SExprError("atom length exceeds limit", start)
    if i >= n or b[i] != 0x3A:
        raise SExprError("missing ':' after length", i)
    length = int(digits)
    if i + 1 + length > n:
        raise SExprError(f"atom truncated (need {length} bytes, have {n - i - 1})", i + 1)
    return length, i + 1


def parse_canonical_prefix(b: bytes, pos: int = 0) -> tuple[SExpr, int]:
    """Parse one canonical value starting at ``pos``; return it and the end offset."""
    b = bytes(b)
    n = len(b)
    stack: list[list] = []
    opens: list[int] = []
    i = pos
    while True:
        if i >= n:
            if stack:
                raise SExprError("unbalanced '('", opens[-1])
            raise SExprError("unexpected end of input", i)
        c = b[i]
        if c == 0x28:  # (
            stack.append([])
            opens.append(i)
            i += 1
            continue
        if c == 0x29:  # )
            if not stack:
                raise SExprError("unbalanced ')'", i)
            value = stack.pop()
            opens.pop()
            i += 1
        else:
            length, i = _parse_length(b, i)
            value = b[i:i + length]
            i += length
        if not stack:
            return value, i
        stack[-1].append(value)


def parse_canonical(b: bytes) -> SExpr:
    value, end = parse_canonical_prefix(b, 0)
    if end != len(b):
        raise SExprError("trailing bytes after value", end)
    return value


def iter_canonical(b: bytes) -> Iterator[tuple[SExpr, int, int]]:
    """Greedily parse a concatenation of canonical values: yields (value, start, end)."""
    pos = 0
    while pos < len(b):
        value, end = parse_canonical_prefix(b, pos)
        yield value, pos, end
        pos = end


def hash_bytes(b: bytes) -> Digest:
    return Digest(hashlib.sha256(b).digest())


def hash_canonical(v: SExpr) -> Digest:
    return hash_bytes(encode_canonical(v))


# -- display form ----------------------------------------------------------

def _printable_text(a: bytes):
    try:
        text = a.decode("utf-8")
    except UnicodeDecodeError:
        return None
    for ch in text:
        if ch in "\n\t":
            continue
        if not ch.isprintable():
            return None
    return text


def render_atom(a: bytes) -> str:
    if isinstance(a, Digest):
        return a.display()
    if a and a[0] in _TOKEN_START and all(c in _TOKEN_CHARS for c in a):
        return a.decode("ascii")
    text = _printable_text(a)
    if text is None:
        return "|" + base64.b64encode(a).decode("ascii") + "|"
    if "\\" in text and all(0x21 <= c <= 0x7E for c in a):
        # patterns and similar: backslash-heavy but otherwise plain, keep them literal
        return f"{len(a)}:{text}"
    return '"' + text.translate(_DISPLAY_ESCAPES) + '"'


def render_display(v: SExpr, width: int = 72) -> str:
    """Human-readable rendering.

    Lists that fit in ``width`` columns stay on one line; longer ones put
    each element after the head on its own line, indented two spaces.
    """
    parts: list[str] = []
    _render(v, 0, width, parts)
    return "".join(parts)


def _flat(v) -> str:
    if isinstance(v, (bytes, bytearray)):
        return render_atom(v if isinstance(v, bytes) else bytes(v))
    return "(" + " ".join(_flat(c) for c in v) + ")"


def _render(v, indent: int, width: int, parts: list[str]) -> None:
    flat = _flat(v)
    if isinstance(v, (bytes, bytearray)) or indent + len(flat) <= width or len(v) < 2:
        parts.append(flat)
        return
    parts.append("(")
    _render(v[0], indent + 1, width, parts)
    for child in v[1:]:
        parts.append("\n" + " " * (indent + 2))
        _render(child, indent + 2, width, parts)
    parts.append(")")


def parse_display(t: Union[str, bytes]) -> SExpr:
    b = t.encode("utf-8") if isinstance(t, str) else bytes(t)
    value, i = _DisplayParser(b).parse_value(_skip_ws(b, 0))
    i = _skip_ws(b, i)
    if i != len(b):
        raise SExprError("trailing input after value", i)
    return value


def parse_display_many(t: Union[str, bytes]) -> list:
    """Parse zero or more whitespace-separated display values."""
    b = t.encode("utf-8") if isinstance(t, str) else bytes(t)
    parser = _DisplayParser(b)
    out = []
    i = _skip_ws(b, 0)
    while i < len(b):
        value, i = parser.parse_value(i)
        out.append(value)
        i = _skip_ws(b, i)
    return out


def _skip_ws(b: bytes, i: int) -> int:
    n = len(b)
    while i < n:
        if b[i] in b" \t\r\n\f\v":
            i += 1
        elif b[i] == 0x3B:  # ; comment to end of line
            while i < n and b[i] != 0x0A:
                i += 1
        else:
            break
    return i


class _DisplayParser:
    def __init__(self, b: bytes):
        self.b = b

    def parse_value(self, i: int) -> tuple[SExpr, int]:
        b = self.b
        stack: list[list] = []
        opens: list[int] = []
        while True:
            i = _skip_ws(b, i)
            if i >= len(b):
                if stack:
                    raise SExprError("unbalanced '('", opens[-1])
                raise SExprError("unexpected end of input", i)
            c = b[i]
            if c == 0x28:
                stack.append([])
                opens.append(i)
                i += 1
                continue
            if c == 0x29:
                if not stack:
                    raise SExprError("unbalanced ')'", i)
                value = stack.pop()
                opens.pop()
                i += 1
            else:
                value, i = self.parse_atom(i)
            if not stack:
                return value, i
            stack[-1].append(value)

    def parse_atom(self, i: int) -> tuple[bytes, int]:
        b = self.b
        c = b[i]
        if c == 0x22:
            return self._quoted(i)
        if c == 0x7C:
            end = b.find(b"|", i + 1)
            if end < 0:
                raise SExprError("unterminated base64 atom", i)
            body = b"".join(b[i + 1:end].split())
            try:
                return base64.b64decode(body, validate=True), end + 1
            except binascii.Error:
                raise SExprError("malformed base64", i) from None
        if 0x30 <= c <= 0x39:
            j = i
            while j < len(b) and 0x30 <= b[j] <= 0x39:
                j += 1
            if j >= len(b) or b[j] != 0x3A:
                raise SExprError("bad verbatim length", i)
            length = int(b[i:j])
            if length > MAX_ATOM_LENGTH or j + 1 + length > len(b):
                raise SExprError("bad verbatim length", i)
            return b[j + 1:j + 1 + length], j + 1 + length
        j = i
        while j < len(b) and b[j] not in _DELIMS:
            j += 1
        if j == i:
            raise SExprError(f"unexpected character {chr(c)!r}", i)
        return b[i:j], j

    def _quoted(self, i: int) -> tuple[bytes, int]:
        b = self.b
        out = bytearray()
        j = i + 1
        while j < len(b):
            c = b[j]
            if c == 0x22:
                return bytes(out), j + 1
            if c == 0x5C:
                if j + 1 >= len(b):
                    break
                esc = _UNESCAPE.get(b[j + 1])
                if esc is None:
                    raise SExprError("unknown escape", j)
                out.append(esc)
                j += 2
                continue
            out.append(c)
            j += 1
        raise SExprError("unterminated quote", i)
