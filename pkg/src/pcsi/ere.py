"""POSIX extended regular expressions with Awk escapes, leftmost-longest.

Strings are matched as byte sequences.  ``bytes`` input is accepted
directly; ``str`` input is treated as latin-1 so that each code point is one
byte, which is how the Hex interpreter stores its strings.

The pattern compiles to a Thompson NFA which is simulated through a lazily
built DFA (state = set of NFA positions).  Searching tries each start offset
in turn and runs the DFA forward, remembering the last accepting offset, so
the first start that matches wins and the longest end from it is reported.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Optional, Union

# instruction opcodes
_CHAR = 0  # (op, frozenset-of-codes, negated)
_SPLIT = 1  # (op, x, y)
_JMP = 2  # (op, x)
_BOL = 3
_EOL = 4
_MATCH = 5

MAX_REPEAT = 255

_CLASSES = {
    "alpha": lambda c: 65 <= c <= 90 or 97 <= c <= 122,
    "digit": lambda c: 48 <= c <= 57,
    "alnum": lambda c: 48 <= c <= 57 or 65 <= c <= 90 or 97 <= c <= 122,
    "upper": lambda c: 65 <= c <= 90,
    "lower": lambda c: 97 <= c <= 122,
    "space": lambda c: c in (9, 10, 11, 12, 13, 32),
    "blank": lambda c: c in (9, 32),
    "punct": lambda c: 33 <= c <= 47 or 58 <= c <= 64 or 91 <= c <= 96 or 123 <= c <= 126,
    "print": lambda c: 32 <= c <= 126,
    "graph": lambda c: 33 <= c <= 126,
    "cntrl": lambda c: c < 32 or c == 127,
    "xdigit": lambda c: 48 <= c <= 57 or 65 <= c <= 70 or 97 <= c <= 102,
}
_CLASS_SETS = {k: frozenset(c for c in range(256) if f(c)) for k, f in _CLASSES.items()}

_SIMPLE_ESCAPES = {
    "n": 10, "t": 9, "r": 13, "f": 12, "v": 11, "b": 8, "a": 7,
}


class RegexError(ValueError):
    pass


# -- parsing ---------------------------------------------------------------
# AST nodes: ("lit", set, negated) ("cat", [..]) ("alt", [..]) ("rep", node, min, max|None)
#            ("bol",) ("eol",) ("group", node)


class _Parser:
    def __init__(self, pattern: str):
        self.p = pattern
        self.i = 0

    def error(self, msg: str):
        raise RegexError(f"{msg} in regex /{self.p}/ at {self.i}")

    def peek(self) -> Optional[str]:
        return self.p[self.i] if self.i < len(self.p) else None

    def parse(self):
        node = self.alternation()
        if self.i < len(self.p):
            self.error("unmatched ')'")
        return node

    def alternation(self):
        branches = [self.concat()]
        while self.peek() == "|":
            self.i += 1
            branches.append(self.concat())
        return branches[0] if len(branches) == 1 else ("alt", branches)

    def concat(self):
        items = []
        while True:
            c = self.peek()
            if c is None or c in "|)":
                break
            items.append(self.piece(at_start=not items))
        return ("cat", items)

    def piece(self, at_start: bool):
        node = self.atom(at_start)
        while True:
            c = self.peek()
            if c == "*":
                self.i += 1
                node = ("rep", node, 0, None)
            elif c == "+":
                self.i += 1
                node = ("rep", node, 1, None)
            elif c == "?":
                self.i += 1
                node = ("rep", node, 0, 1)
            elif c == "{":
                bounds = self.interval()
                if bounds is None:
                    break
                node = ("rep", node, bounds[0], bounds[1])
            else:
                break
        return node

    def interval(self):
        j = self.i + 1
        p = self.p
        k = j
        while k < len(p) and p[k].isdigit():
            k += 1
        if k == j:
            return None
        lo = int(p[j:k])
        hi: Optional[int] = lo
        if k < len(p) and p[k] == ",":
            k += 1
            m = k
            while k < len(p) and p[k].isdigit():
                k += 1
            hi = int(p[m:k]) if k > m else None
        if k >= len(p) or p[k] != "}":
            return None
        if lo > MAX_REPEAT or (hi is not None and (hi > MAX_REPEAT or hi < lo)):
            self.error("bad repetition bounds")
        self.i = k + 1
        return lo, hi

    def atom(self, at_start: bool):
        c = self.peek()
        self.i += 1
        if c == "(":
            node = self.alternation()
            if self.peek() != ")":
                self.error("missing ')'")
            self.i += 1
            return ("group", node)
        if c == ".":
            return ("lit", frozenset(), True)
        if c == "^":
            return ("bol",)
        if c == "$":
            return ("eol",)
        if c == "[":
            return self.bracket()
        if c == "\\":
            return ("lit", frozenset([self.escape()]), False)
        if c in "*+?" and at_start:
            return ("lit", frozenset([ord(c)]), False)
        if c in "*+?":
            self.error(f"nothing to repeat before {c!r}")
        return ("lit", frozenset([ord(c)]), False)

    def escape(self) -> int:
        """Parse the escape after a backslash; return the byte value."""
        if self.i >= len(self.p):
            return ord("\\")
        c = self.p[self.i]
        self.i += 1
        if c in _SIMPLE_ESCAPES:
            return _SIMPLE_ESCAPES[c]
        if c in "01234567":
            j = self.i - 1
            k = j
            while k < len(self.p) and k < j + 3 and self.p[k] in "01234567":
                k += 1
            self.i = k
            return int(self.p[j:k], 8) & 0xFF
        return ord(c)

    def bracket(self):
        negated = False
        if self.peek() == "^":
            negated = True
            self.i += 1
        members: set[int] = set()
        first = True
        while True:
            c = self.peek()
            if c is None:
                self.error("unterminated bracket expression")
            if c == "]" and not first:
                self.i += 1
                break
            first = False
            if c == "[" and self.p.startswith("[:", self.i):
                end = self.p.find(":]", self.i + 2)
                name = self.p[self.i + 2:end] if end > 0 else None
                if name in _CLASS_SETS:
                    members |= _CLASS_SETS[name]
                    self.i = end + 2
                    continue
                self.error("unknown character class")
            lo = self.bracket_char()
            if self.peek() == "-" and self.i + 1 < len(self.p) and self.p[self.i + 1] != "]":
                self.i += 1
                hi = self.bracket_char()
                if hi < lo:
                    self.error("invalid range")
                members.update(range(lo, hi + 1))
            else:
                members.add(lo)
        return ("lit", frozenset(members), negated)

    def bracket_char(self) -> int:
        c = self.p[self.i]
        self.i += 1
        if c == "\\":
            return self.escape()
        return ord(c)


# -- compilation -----------------------------------------------------------


def _emit(node, prog: list):
    kind = node[0]
    if kind == "lit":
        prog.append((_CHAR, node[1], node[2]))
    elif kind == "bol":
        prog.append((_BOL,))
    elif kind == "eol":
        prog.append((_EOL,))
    elif kind == "group":
        _emit(node[1], prog)
    elif kind == "cat":
        for item in node[1]:
            _emit(item, prog)
    elif kind == "alt":
        branches = node[1]
        jumps = []
        for b in branches[:-1]:
            split = len(prog)
            prog.append(None)
            _emit(b, prog)
            jumps.append(len(prog))
            prog.append(None)
            prog[split] = (_SPLIT, split + 1, len(prog))
        _emit(branches[-1], prog)
        for j in jumps:
            prog[j] = (_JMP, len(prog))
    elif kind == "rep":
        _, sub, lo, hi = node
        for _ in range(lo):
            _emit(sub, prog)
        if hi is None:
            # L: split body, out; body; jmp L
            loop = len(prog)
            prog.append(None)
            _emit(sub, prog)
            prog.append((_JMP, loop))
            prog[loop] = (_SPLIT, loop + 1, len(prog))
        else:
            holes = []
            for _ in range(hi - lo):
                holes.append(len(prog))
                prog.append(None)
                _emit(sub, prog)
            end = len(prog)
            for h in holes:
                prog[h] = (_SPLIT, h + 1, end)
    else:  # pragma: no cover
        raise AssertionError(kind)


class Regex:
    """A compiled ERE.  Instances are immutable apart from their DFA cache."""

    def __init__(self, pattern: Union[str, bytes]):
        if isinstance(pattern, (bytes, bytearray)):
            pattern = bytes(pattern).decode("latin-1")
        self.pattern = pattern
        prog: list = []
        _emit(_Parser(pattern).parse(), prog)
        prog.append((_MATCH,))
        self.prog = prog
        self._closure_cache: dict = {}
        self._step_cache: dict = {}
        self._accept_cache: dict = {}
        self._literal = self._pure_literal(pattern)

    @staticmethod
    def _pure_literal(pattern: str) -> Optional[str]:
        if pattern and not any(c in "\\^$.[]|()*+?{}" for c in pattern):
            return pattern
        return None

    def __repr__(self) -> str:
        return f"Regex({self.pattern!r})"

    # closure over epsilon edges; BOL holds only at offset 0
    def _closure(self, kernel: frozenset, bol: bool, eol: bool) -> frozenset:
        key = (kernel, bol, eol)
        hit = self._closure_cache.get(key)
        if hit is not None:
            return hit
        prog = self.prog
        seen = set()
        out = []
        stack = list(kernel)
        while stack:
            pc = stack.pop()
            if pc in seen:
                continue
            seen.add(pc)
            ins = prog[pc]
            op = ins[0]
            if op == _SPLIT:
                stack.append(ins[2])
                stack.append(ins[1])
            elif op == _JMP:
                stack.append(ins[1])
            elif op == _BOL:
                if bol:
                    stack.append(pc + 1)
            elif op == _EOL:
                if eol:
                    stack.append(pc + 1)
            else:
                out.append(pc)
        result = frozenset(out)
        self._closure_cache[key] = result
        return result

    def _accepts(self, kernel: frozenset, bol: bool, eol: bool) -> bool:
        key = (kernel, bol, eol)
        hit = self._accept_cache.get(key)
        if hit is None:
            hit = self._match_pc_in(self._closure(kernel, bol, eol))
            self._accept_cache[key] = hit
        return hit

    def _match_pc_in(self, states: frozenset) -> bool:
        return (len(self.prog) - 1) in states

    def _step(self, kernel: frozenset, bol: bool, ch: int) -> frozenset:
        key = (kernel, bol, ch)
        hit = self._step_cache.get(key)
        if hit is not None:
            return hit
        prog = self.prog
        nxt = []
        for pc in self._closure(kernel, bol, False):
            ins = prog[pc]
            if ins[0] == _CHAR and ((ch in ins[1]) != ins[2]):
                nxt.append(pc + 1)
        result = frozenset(nxt)
        self._step_cache[key] = result
        return result

    def _longest_from(self, codes, start: int) -> int:
        """Longest match end starting exactly at ``start``, or -1."""
        n = len(codes)
        kernel = frozenset([0])
        bol = start == 0
        last = -1
        i = start
        while True:
            if self._accepts(kernel, bol, i == n):
                last = i
            if i == n:
                break
            kernel = self._step(kernel, bol, codes[i])
            bol = False
            if not kernel:
                break
            i += 1
        return last

    @staticmethod
    def _codes(s) -> bytes:
        if isinstance(s, str):
            return s.encode("latin-1")
        return bytes(s)

    def search(self, s, pos: int = 0) -> Optional[tuple[int, int]]:
        """Leftmost-longest match at or after ``pos``: (start, end) or None."""
        codes = self._codes(s)
        if self._literal is not None:
            lit = self._literal.encode("latin-1")
            k = codes.find(lit, pos)
            return None if k < 0 else (k, k + len(lit))
        for start in range(pos, len(codes) + 1):
            end = self._longest_from(codes, start)
            if end >= 0:
                return start, end
        return None

    def fullmatch(self, s) -> bool:
        codes = self._codes(s)
        return self._longest_from(codes, 0) == len(codes)

    def test(self, s) -> bool:
        return self.search(s) is not None


@lru_cache(maxsize=1024)
def compile_regex(pattern: Union[str, bytes]) -> Regex:
    return Regex(pattern)
