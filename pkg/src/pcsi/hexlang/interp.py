"""Closure compiler and runtime for Hex programs.

Each execution builds a fresh set of Python closures from the (immutable)
AST, bound to a private ``Interp`` state: the global slot table, output
buffer, counters, and the DOM tree.  Statements return a small integer
signal (break/continue/return) instead of raising, which keeps loops cheap;
``exit`` and errors unwind with exceptions.
"""

from __future__ import annotations

import math
import random
import re
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .. import ere
from ..cssselect import SelectorError, parse_selector, selector_matches
from ..htmldom import ELEMENT, TEXT, DomTree
from .dates import seconds as parse_seconds
from .format import sprintf
from .lexer import HexSyntaxError
from .parser import FunctionDef, ProgramAST
from .values import (
    UNINIT,
    HexArray,
    HexTypeError,
    Uninit,
    compare,
    make_strnum,
    num_to_str,
    to_bool,
    to_num,
    to_str,
)

BREAK, CONTINUE, RETURN = 1, 2, 3

# (min, max) argument counts; max None means unbounded
BUILTIN_ARITY = {
    "length": (0, 1), "substr": (2, 3), "index": (2, 2), "split": (2, 3),
    "sub": (3, 3), "gsub": (3, 3), "match": (2, 2), "sprintf": (1, None),
    "tolower": (1, 1), "toupper": (1, 1), "int": (1, 1), "sqrt": (1, 1),
    "exp": (1, 1), "log": (1, 1), "sin": (1, 1), "cos": (1, 1), "atan2": (2, 2),
    "rand": (0, 0), "srand": (0, 1),
    "root": (0, 0), "parent": (1, 1), "sister": (1, 1), "children": (1, 1),
    "type": (1, 1), "name": (1, 1), "text": (1, 1), "attr": (2, 2),
    "selmatch": (2, 2), "seconds": (1, 1),
}

SPECIAL_DEFAULTS = {
    "CONVFMT": "%.6g", "OFMT": "%.6g", "FS": " ", "OFS": " ", "ORS": "\n", "RS": "\n",
    "SUBSEP": "\x1c", "NR": 0.0, "NF": 0.0, "FNR": 0.0, "RSTART": 0.0, "RLENGTH": -1.0,
    "FILENAME": "", "ARGC": 1.0,
}
SPECIAL_ARRAYS = ("ENVIRON", "ARGV")

# default field splitting: runs of space, tab, newline only
_WS_RUN = re.compile(r"[^ \t\n]+")
_LOWER = {c: c + 32 for c in range(65, 91)}
_UPPER = {c: c - 32 for c in range(97, 123)}


class HexRuntimeError(Exception):
    pass


class ResourceLimit(HexRuntimeError):
    def __init__(self, which: str):
        super().__init__(f"resource limit: {which}")
        self.which = which


class ExitProgram(Exception):
    def __init__(self, status: int):
        self.status = status


@dataclass(frozen=True)
class Limits:
    cpu_seconds: float = 10.0
    max_output_bytes: int = 16 * 1024 * 1024
    max_steps: int = 50_000_000
    max_depth: int = 10_000


# -- static analysis: which names are arrays --------------------------------


@dataclass
class Analysis:
    global_kinds: dict = field(default_factory=dict)
    param_kinds: dict = field(default_factory=dict)  # fname -> list of "array"/"scalar"/None


def _events(node, out: list):
    """Collect (kind, name, extra) usage events from an AST subtree."""
    if not isinstance(node, tuple) or not node:
        return
    k = node[0]
    if k == "var":
        out.append(("scalar", node[1], None))
        return
    if k == "index":
        out.append(("array", node[1], None))
        for s in node[2]:
            _events(s, out)
        return
    if k == "in":
        out.append(("array", node[2], None))
        for s in node[1]:
            _events(s, out)
        return
    if k == "forin":
        out.append(("scalar", node[1], None))
        out.append(("array", node[2], None))
        _events(node[3], out)
        return
    if k == "delete":
        out.append(("array", node[1], None))
        for s in node[2] or ():
            _events(s, out)
        return
    if k == "builtin":
        name, args = node[1], node[2]
        for j, a in enumerate(args):
            if name == "split" and j == 1 and a[0] == "var":
                out.append(("array", a[1], None))
            elif name == "length" and a[0] == "var":
                out.append(("either", a[1], None))
            else:
                _events(a, out)
        return
    if k == "call":
        for j, a in enumerate(node[2]):
            if a[0] == "var":
                out.append(("pass", a[1], (node[1], j)))
            else:
                _events(a, out)
        return
    for child in node[1:]:
        if isinstance(child, tuple):
            _events(child, out)
        elif isinstance(child, list):
            for c in child:
                _events(c, out)


def analyze(prog: ProgramAST) -> Analysis:
    scopes = []  # (fname or None, params, events)
    for blk in prog.begin:
        ev: list = []
        _events(blk, ev)
        scopes.append((None, [], ev))
    for fn in prog.functions.values():
        ev = []
        _events(fn.body, ev)
        scopes.append((fn.name, fn.params, ev))

    kinds: dict = {}  # (fname|None, name) -> set of uses

    def key(fname, params, name):
        return (fname, name) if name in params else (None, name)

    for fname, params, ev in scopes:
        for kind, name, _ in ev:
            if kind in ("array", "scalar"):
                kinds.setdefault(key(fname, params, name), set()).add(kind)
            else:
                kinds.setdefault(key(fname, params, name), set())

    changed = True
    while changed:
        changed = False
        for fname, params, ev in scopes:
            for kind, name, extra in ev:
                if kind != "pass":
                    continue
                g, j = extra
                fn = prog.functions.get(g)
                if fn is None or j >= len(fn.params):
                    continue
                target = kinds.get((g, fn.params[j]), set())
                k = key(fname, params, name)
                if "array" in target and "array" not in kinds.setdefault(k, set()):
                    kinds[k].add("array")
                    changed = True
    analysis = Analysis()
    for (fname, name), uses in kinds.items():
        if uses == {"array", "scalar"}:
            where = f"function {fname}" if fname else "program"
            line = prog.functions[fname].line if fname else 1
            raise HexSyntaxError(f"{name!r} used as both array and scalar in {where}", line, 1)
        kind = "array" if "array" in uses else ("scalar" if uses else None)
        if fname is None:
            analysis.global_kinds[name] = kind
    for fn in prog.functions.values():
        out = []
        for p in fn.params:
            uses = kinds.get((fn.name, p), set())
            out.append("array" if "array" in uses else ("scalar" if uses else None))
        analysis.param_kinds[fn.name] = out
    return analysis


# -- runtime -----------------------------------------------------------------


class Interp:
    def __init__(self, prog: ProgramAST, analysis: Analysis, tree: Optional[DomTree], limits: Limits):
        self.prog = prog
        self.analysis = analysis
        self.tree = tree
        self.limits = limits
        self.out: list[str] = []
        self.out_len = 0
        self.steps = [0, 0]  # [count, next checkpoint]
        self.depth = 0
        self.diagnostics: list[str] = []
        self._warned: set = set()
        self.rng = random.Random(0)
        self.seed = 0.0
        self.cpu_start = time.thread_time()
        self.gslots: dict[str, int] = {}
        self.G: list = []
        self.funcs: dict[str, list] = {}
        for name, value in SPECIAL_DEFAULTS.items():
            self.G[self.gslot(name)] = value
        for name in SPECIAL_ARRAYS:
            self.G[self.gslot(name)] = HexArray()
        self.G[self.gslots["ARGV"]]["0"] = "hex"
        for name, kind in analysis.global_kinds.items():
            slot = self.gslot(name)
            if kind == "array" and not isinstance(self.G[slot], HexArray):
                self.G[slot] = HexArray()
        self._next_check()
        self.main = self.build()

    # -- bookkeeping
    def gslot(self, name: str) -> int:
        slot = self.gslots.get(name)
        if slot is None:
            slot = self.gslots[name] = len(self.G)
            self.G.append(UNINIT)
        return slot

    def _next_check(self):
        self.steps[1] = min(self.steps[0] + 4096, self.limits.max_steps + 1)

    def checkpoint(self):
        if self.steps[0] > self.limits.max_steps:
            raise ResourceLimit("steps")
        if time.thread_time() - self.cpu_start > self.limits.cpu_seconds:
            raise ResourceLimit("cpu")
        self._next_check()

    def emit(self, s: str):
        room = self.limits.max_output_bytes - self.out_len
        if len(s) > room:
            # keep what fits so the caller sees output up to the limit
            self.out.append(s[:room])
            self.out_len += room
            raise ResourceLimit("output")
        self.out.append(s)
        self.out_len += len(s)

    def warn(self, msg: str):
        if msg not in self._warned:
            self._warned.add(msg)
            self.diagnostics.append(msg)

    def convfmt(self) -> str:
        v = self.G[self.gslots["CONVFMT"]]
        return v if isinstance(v, str) else to_str(v)

    def tostr(self, v) -> str:
        if type(v) is float:
            return num_to_str(v, self.convfmt())
        if isinstance(v, HexArray):
            raise HexRuntimeError("attempt to use array in a scalar context")
        return v

    def outstr(self, v) -> str:
        if type(v) is float:
            f = self.G[self.gslots["OFMT"]]
            return num_to_str(v, f if isinstance(f, str) else to_str(f))
        if isinstance(v, HexArray):
            raise HexRuntimeError("attempt to print an array")
        return v

    # -- program
    def build(self) -> Callable:
        for name in self.prog.functions:
            self.funcs[name] = [None]
        for fn in self.prog.functions.values():
            self.funcs[fn.name][0] = self.function(fn)
        blocks = [self.stmt(b, None) for b in self.prog.begin]

        def main():
            for b in blocks:
                b(None)

        return main

    def function(self, fn: FunctionDef):
        scope = {p: i for i, p in enumerate(fn.params)}
        return self.stmt(fn.body, scope)

    # -- names and arrays
    def raw_getter(self, name: str, sc):
        if sc is not None and name in sc:
            i = sc[name]
            return lambda fr: fr[i]
        g = self.gslot(name)
        G = self.G
        return lambda fr: G[g]

    def array_ref(self, name: str, sc):
        """Getter for an array variable; an untouched variable becomes an array."""
        if sc is not None and name in sc:
            i = sc[name]

            def get_local(fr):
                a = fr[i]
                if type(a) is HexArray:
                    return a
                if type(a) is Uninit:
                    a = fr[i] = HexArray()
                    return a
                raise HexRuntimeError(f"can't use scalar {name!r} as array")

            return get_local
        g = self.gslot(name)
        G = self.G

        def get_global(fr):
            a = G[g]
            if type(a) is HexArray:
                return a
            if type(a) is Uninit:
                a = G[g] = HexArray()
                return a
            raise HexRuntimeError(f"can't use scalar {name!r} as array")

        return get_global

    def subscript(self, subs: list, sc):
        fns = [self.expr(s, sc) for s in subs]
        tostr = self.tostr
        if len(fns) == 1:
            f = fns[0]

            def one(fr):
                v = f(fr)
                if type(v) is float:
                    return tostr(v)
                if isinstance(v, HexArray):
                    raise HexRuntimeError("attempt to use array as subscript")
                return str(v) if type(v) is not str else v

            return one
        sep = self.gslots["SUBSEP"]
        G = self.G

        def many(fr):
            return self.tostr(G[sep]).join(tostr(f(fr)) for f in fns)

        return many

    def regex_of(self, node, sc):
        """Closure returning a compiled Regex for a regex-position operand."""
        if node[0] == "ere":
            try:
                rx = ere.compile_regex(node[1])
            except ere.RegexError as exc:
                raise HexSyntaxError(str(exc), node[2], node[3]) from None
            return lambda fr: rx
        f = self.expr(node, sc)
        tostr = self.tostr

        def dyn(fr):
            try:
                return ere.compile_regex(tostr(f(fr)))
            except ere.RegexError as exc:
                raise HexRuntimeError(str(exc)) from None

        return dyn

    # -- statements
    def stmt(self, node, sc):
        k = node[0]
        method = getattr(self, "s_" + k)
        return method(node, sc)

    def s_block(self, node, sc):
        stmts = [self.stmt(s, sc) for s in node[1]]
        ctr = self.steps
        checkpoint = self.checkpoint
        if len(stmts) == 1:
            only = stmts[0]

            def block1(fr):
                ctr[0] += 1
                if ctr[0] >= ctr[1]:
                    checkpoint()
                return only(fr)

            return block1

        def block(fr):
            for s in stmts:
                ctr[0] += 1
                if ctr[0] >= ctr[1]:
                    checkpoint()
                sig = s(fr)
                if sig:
                    return sig
            return None

        return block

    def s_expr(self, node, sc):
        e = self.expr(node[1], sc)

        def run(fr):
            e(fr)

        return run

    def s_print(self, node, sc):
        items = [self.expr(x, sc) for x in node[1]]
        G = self.G
        ofs, ors = self.gslots["OFS"], self.gslots["ORS"]
        outstr, tostr, emit = self.outstr, self.tostr, self.emit
        if len(items) == 1:
            only = items[0]

            def print1(fr):
                emit(outstr(only(fr)) + tostr(G[ors]))

            return print1

        def print_(fr):
            vals = [outstr(f(fr)) for f in items]
            emit(tostr(G[ofs]).join(vals) + tostr(G[ors]))

        return print_

    def s_printf(self, node, sc):
        items = [self.expr(x, sc) for x in node[1]]
        emit = self.emit

        def printf(fr):
            vals = [f(fr) for f in items]
            emit(sprintf(self.tostr(vals[0]), vals[1:], self.convfmt()))

        return printf

    def s_if(self, node, sc):
        cond = self.cond(node[1], sc)
        then = self.stmt(node[2], sc)
        if node[3] is None:

            def if_(fr):
                if cond(fr):
                    return then(fr)
                return None

            return if_
        other = self.stmt(node[3], sc)

        def if_else(fr):
            if cond(fr):
                return then(fr)
            return other(fr)

        return if_else

    def s_while(self, node, sc):
        cond = self.cond(node[1], sc)
        body = self.stmt(node[2], sc)
        ctr, checkpoint = self.steps, self.checkpoint

        def while_(fr):
            while cond(fr):
                ctr[0] += 1
                if ctr[0] >= ctr[1]:
                    checkpoint()
                sig = body(fr)
                if sig == BREAK:
                    break
                if sig == RETURN:
                    return sig
            return None

        return while_

    def s_do(self, node, sc):
        body = self.stmt(node[1], sc)
        cond = self.cond(node[2], sc)
        ctr, checkpoint = self.steps, self.checkpoint

        def do(fr):
            while True:
                ctr[0] += 1
                if ctr[0] >= ctr[1]:
                    checkpoint()
                sig = body(fr)
                if sig == BREAK:
                    break
                if sig == RETURN:
                    return sig
                if not cond(fr):
                    break
            return None

        return do

    def s_for(self, node, sc):
        _, init, cond_n, step, body_n = node
        init = self.stmt(init, sc) if init is not None else None
        cond = self.cond(cond_n, sc) if cond_n is not None else (lambda fr: True)
        step = self.stmt(step, sc) if step is not None else None
        body = self.stmt(body_n, sc)
        ctr, checkpoint = self.steps, self.checkpoint

        def for_(fr):
            if init is not None:
                init(fr)
            while cond(fr):
                ctr[0] += 1
                if ctr[0] >= ctr[1]:
                    checkpoint()
                sig = body(fr)
                if sig == BREAK:
                    break
                if sig == RETURN:
                    return sig
                if step is not None:
                    step(fr)
            return None

        return for_

    def s_forin(self, node, sc):
        _, var, arr_name, body_n = node
        arr = self.array_ref(arr_name, sc)
        body = self.stmt(body_n, sc)
        ctr, checkpoint = self.steps, self.checkpoint
        if sc is not None and var in sc:
            i = sc[var]

            def assign(fr, v):
                fr[i] = v
        else:
            g = self.gslot(var)
            G = self.G

            def assign(fr, v):
                G[g] = v

        def forin(fr):
            a = arr(fr)
            for k in list(a):
                if k not in a:
                    continue
                ctr[0] += 1
                if ctr[0] >= ctr[1]:
                    checkpoint()
                assign(fr, k)
                sig = body(fr)
                if sig == BREAK:
                    break
                if sig == RETURN:
                    return sig
            return None

        return forin

    def s_break(self, node, sc):
        return lambda fr: BREAK

    def s_continue(self, node, sc):
        return lambda fr: CONTINUE

    def s_exit(self, node, sc):
        e = self.expr(node[1], sc) if node[1] is not None else None

        def exit_(fr):
            status = 0
            if e is not None:
                x = to_num(e(fr))
                status = int(x) & 0xFF if math.isfinite(x) else 0
            raise ExitProgram(status)

        return exit_

    def s_return(self, node, sc):
        if sc is None:
            raise HexSyntaxError("return outside function", 1, 1)
        if node[1] is None:

            def ret_none(fr):
                fr[-1] = UNINIT
                return RETURN

            return ret_none
        e = self.expr(node[1], sc)

        def ret(fr):
            v = e(fr)
            if isinstance(v, HexArray):
                raise HexRuntimeError("cannot return an array")
            fr[-1] = v
            return RETURN

        return ret

    def s_delete(self, node, sc):
        arr = self.array_ref(node[1], sc)
        if node[2] is None:
            return lambda fr: arr(fr).clear()
        key = self.subscript(node[2], sc)

        def delete(fr):
            arr(fr).pop(key(fr), None)

        return delete

    # -- expressions
    def cond(self, node, sc):
        """Closure producing a Python bool."""
        k = node[0]
        if k == "cmp":
            return self._cmp_bool(node, sc)
        if k == "not":
            inner = self.cond(node[1], sc)
            return lambda fr: not inner(fr)
        if k == "and":
            a, b = self.cond(node[1], sc), self.cond(node[2], sc)
            return lambda fr: a(fr) and b(fr)
        if k == "or":
            a, b = self.cond(node[1], sc), self.cond(node[2], sc)
            return lambda fr: a(fr) or b(fr)
        if k == "group":
            return self.cond(node[1], sc)
        e = self.expr(node, sc)

        def truth(fr):
            try:
                return to_bool(e(fr))
            except HexTypeError as exc:
                raise HexRuntimeError(str(exc)) from None

        return truth

    def _cmp_bool(self, node, sc):
        _, op, a_n, b_n = node
        a, b = self.expr(a_n, sc), self.expr(b_n, sc)
        convfmt = self.convfmt

        def c(fr):
            x, y = a(fr), b(fr)
            if type(x) is float and type(y) is float:
                r = (x > y) - (x < y)
            else:
                if isinstance(x, HexArray) or isinstance(y, HexArray):
                    raise HexRuntimeError("attempt to compare an array")
                r = compare(x, y, convfmt())
            return r

        if op == "==":
            return lambda fr: c(fr) == 0
        if op == "!=":
            return lambda fr: c(fr) != 0
        if op == "<":
            return lambda fr: c(fr) < 0
        if op == "<=":
            return lambda fr: c(fr) <= 0
        if op == ">":
            return lambda fr: c(fr) > 0
        return lambda fr: c(fr) >= 0

    def expr(self, node, sc):
        return getattr(self, "e_" + node[0])(node, sc)

    def e_num(self, node, sc):
        v = node[1]
        return lambda fr: v

    def e_str(self, node, sc):
        v = node[1]
        return lambda fr: v

    def e_ere(self, node, sc):
        rx = self.regex_of(node, sc)(None)
        # a bare regex tests the current record, which is always empty here
        hit = 1.0 if rx.search("") else 0.0
        return lambda fr: hit

    def e_group(self, node, sc):
        return self.expr(node[1], sc)

    def e_var(self, node, sc):
        return self.raw_getter(node[1], sc)

    def e_index(self, node, sc):
        arr = self.array_ref(node[1], sc)
        key = self.subscript(node[2], sc)

        def index(fr):
            a = arr(fr)
            k = key(fr)
            v = a.get(k)
            if v is None:
                v = a[k] = UNINIT
            return v

        return index

    def e_field(self, node, sc):
        e = self.expr(node[1], sc)

        def field_(fr):
            e(fr)
            return UNINIT

        return field_

    def _bool_expr(self, node, sc):
        c = self.cond(node, sc)
        return lambda fr: 1.0 if c(fr) else 0.0

    e_cmp = e_and = e_or = e_not = _bool_expr

    def e_cond(self, node, sc):
        c = self.cond(node[1], sc)
        a, b = self.expr(node[2], sc), self.expr(node[3], sc)
        return lambda fr: a(fr) if c(fr) else b(fr)

    def e_in(self, node, sc):
        key = self.subscript(node[1], sc)
        arr = self.array_ref(node[2], sc)
        return lambda fr: 1.0 if key(fr) in arr(fr) else 0.0

    def e_match(self, node, sc):
        _, neg, left_n, re_n = node
        left = self.expr(left_n, sc)
        rx = self.regex_of(re_n, sc)
        tostr = self.tostr
        if neg:
            return lambda fr: 0.0 if rx(fr).search(tostr(left(fr))) else 1.0
        return lambda fr: 1.0 if rx(fr).search(tostr(left(fr))) else 0.0

    def e_concat(self, node, sc):
        parts = []
        stack = [node]
        while stack:
            n = stack.pop()
            if n[0] == "concat":
                stack.append(n[2])
                stack.append(n[1])
            else:
                parts.append(self.expr(n, sc))
        tostr = self.tostr
        if len(parts) == 2:
            a, b = parts
            return lambda fr: tostr(a(fr)) + tostr(b(fr))
        return lambda fr: "".join([tostr(p(fr)) for p in parts])

    @staticmethod
    def arith(op: str, x: float, y: float) -> float:
        if op == "+":
            return x + y
        if op == "-":
            return x - y
        if op == "*":
            return x * y
        if op == "/":
            if y == 0.0:
                raise HexRuntimeError("division by zero")
            return x / y
        if op == "%":
            if y == 0.0:
                raise HexRuntimeError("division by zero in %")
            return math.fmod(x, y)
        # ^
        try:
            return math.pow(x, y)
        except OverflowError:
            return math.inf
        except ValueError:
            return math.nan

    def _num(self, node, sc):
        e = self.expr(node, sc)

        def num(fr):
            v = e(fr)
            if type(v) is float:
                return v
            try:
                return to_num(v)
            except HexTypeError as exc:
                raise HexRuntimeError(str(exc)) from None

        return num

    def e_binop(self, node, sc):
        _, op, a_n, b_n = node
        a, b = self._num(a_n, sc), self._num(b_n, sc)
        if op == "+":
            return lambda fr: a(fr) + b(fr)
        if op == "-":
            return lambda fr: a(fr) - b(fr)
        if op == "*":
            return lambda fr: a(fr) * b(fr)
        arith = self.arith
        return lambda fr: arith(op, a(fr), b(fr))

    def e_neg(self, node, sc):
        a = self._num(node[1], sc)
        return lambda fr: -a(fr)

    def e_pos(self, node, sc):
        return self._num(node[1], sc)

    # lvalues: (get, set) pair; set returns the stored value
    def lvalue(self, node, sc):
        k = node[0]
        if k == "var":
            name = node[1]
            if sc is not None and name in sc:
                i = sc[name]

                def set_local(fr, v):
                    fr[i] = v
                    return v

                return (lambda fr: fr[i]), set_local, None
            g = self.gslot(name)
            G = self.G

            def set_global(fr, v):
                G[g] = v
                return v

            return (lambda fr: G[g]), set_global, None
        if k == "index":
            arr = self.array_ref(node[1], sc)
            key = self.subscript(node[2], sc)
            return arr, key, "index"
        if k == "group":
            return self.lvalue(node[1], sc)
        raise HexSyntaxError("assignment to fields is not available in Hex", 1, 1)

    def e_assign(self, node, sc):
        _, op, target, rhs_n = node
        rhs = self.expr(rhs_n, sc)
        get, put, kind = self.lvalue(target, sc)
        arith = self.arith
        aop = op[0]

        def scalar(v):
            if isinstance(v, HexArray):
                raise HexRuntimeError("cannot assign an array")
            return v

        if kind == "index":
            arr, key = get, put
            if op == "=":

                def assign_index(fr):
                    v = scalar(rhs(fr))
                    arr(fr)[key(fr)] = v
                    return v

                return assign_index

            def update_index(fr):
                a = arr(fr)
                k = key(fr)
                v = arith(aop, to_num(a.get(k, UNINIT)), to_num(scalar(rhs(fr))))
                a[k] = v
                return v

            return update_index
        if op == "=":
            return lambda fr: put(fr, scalar(rhs(fr)))

        def update(fr):
            cur = get(fr)
            if isinstance(cur, HexArray):
                raise HexRuntimeError("attempt to use array in a scalar context")
            return put(fr, arith(aop, to_num(cur), to_num(scalar(rhs(fr)))))

        return update

    def _incdec(self, node, sc, post: bool):
        _, op, target = node
        get, put, kind = self.lvalue(target, sc)
        delta = 1.0 if op == "++" else -1.0

        def num(v):
            if isinstance(v, HexArray):
                raise HexRuntimeError("attempt to use array in a scalar context")
            return to_num(v)

        if kind == "index":
            arr, key = get, put

            def incdec_index(fr):
                a = arr(fr)
                k = key(fr)
                old = num(a.get(k, UNINIT))
                a[k] = old + delta
                return old if post else old + delta

            return incdec_index

        def incdec(fr):
            old = num(get(fr))
            put(fr, old + delta)
            return old if post else old + delta

        return incdec

    def e_preinc(self, node, sc):
        return self._incdec(node, sc, post=False)

    def e_postinc(self, node, sc):
        return self._incdec(node, sc, post=True)

    def e_call(self, node, sc):
        _, fname, args, line, col = node
        fn = self.prog.functions.get(fname)
        if fn is None:
            raise HexSyntaxError(f"call to undefined function {fname!r}", line, col)
        if len(args) > len(fn.params):
            raise HexSyntaxError(f"function {fname!r} called with too many arguments", line, col)
        kinds = self.analysis.param_kinds[fname]
        argfns = []
        for j, a in enumerate(args):
            bare = a[1] if a[0] == "var" else None
            if kinds[j] == "array":
                if bare is None:
                    raise HexSyntaxError(
                        f"argument {j + 1} of {fname!r} must be an array name", line, col
                    )
                argfns.append(self.array_ref(bare, sc))
            elif bare is not None:
                raw = self.raw_getter(bare, sc)
                if kinds[j] == "scalar":

                    def scalar_arg(fr, raw=raw, bare=bare):
                        v = raw(fr)
                        if isinstance(v, HexArray):
                            raise HexRuntimeError(f"array {bare!r} passed as a scalar")
                        return v

                    argfns.append(scalar_arg)
                else:
                    argfns.append(raw)
            else:
                argfns.append(self.expr(a, sc))
        nparams = len(fn.params)
        nargs = len(argfns)
        array_locals = [j for j in range(nargs, nparams) if kinds[j] == "array"]
        cell = self.funcs[fname]
        ctr, checkpoint = self.steps, self.checkpoint
        max_depth = self.limits.max_depth
        interp = self

        def call(fr):
            new = [UNINIT] * (nparams + 1)
            for j in range(nargs):
                new[j] = argfns[j](fr)
            for j in array_locals:
                new[j] = HexArray()
            ctr[0] += 1
            if ctr[0] >= ctr[1]:
                checkpoint()
            interp.depth += 1
            if interp.depth > max_depth:
                raise ResourceLimit("recursion depth")
            try:
                sig = cell[0](new)
            finally:
                interp.depth -= 1
            return new[nparams] if sig == RETURN else UNINIT

        return call

    # -- built-in functions
    def e_builtin(self, node, sc):
        _, name, args, line, col = node
        lo, hi = BUILTIN_ARITY[name]
        if len(args) < lo or (hi is not None and len(args) > hi):
            raise HexSyntaxError(f"wrong number of arguments to {name}()", line, col)
        return getattr(self, "b_" + name)(args, sc, line, col)

    def _str(self, node, sc):
        e = self.expr(node, sc)
        tostr = self.tostr
        return lambda fr: tostr(e(fr))

    def b_length(self, args, sc, line, col):
        if not args:
            return lambda fr: 0.0
        a = args[0]
        if a[0] == "var":
            raw = self.raw_getter(a[1], sc)
            tostr = self.tostr

            def length_var(fr):
                v = raw(fr)
                if isinstance(v, HexArray):
                    return float(len(v))
                return float(len(tostr(v)))

            return length_var
        s = self._str(a, sc)
        return lambda fr: float(len(s(fr)))

    def b_substr(self, args, sc, line, col):
        s = self._str(args[0], sc)
        m = self._num(args[1], sc)
        n = self._num(args[2], sc) if len(args) > 2 else None

        def substr(fr):
            text = s(fr)
            length = len(text)
            start = m(fr)
            if math.isnan(start):
                start = 0.0
            begin = math.floor(start + 0.5)
            if n is None:
                end = length + 1
            else:
                cnt = n(fr)
                if math.isnan(cnt):
                    return ""
                end = begin + math.floor(cnt + 0.5) if math.isfinite(cnt) else (length + 1 if cnt > 0 else begin)
            begin = max(begin, 1)
            end = min(end, length + 1)
            if end <= begin:
                return ""
            return text[begin - 1:end - 1]

        return substr

    def b_index(self, args, sc, line, col):
        s, t = self._str(args[0], sc), self._str(args[1], sc)

        def index(fr):
            return float(s(fr).find(t(fr)) + 1)

        return index

    def b_split(self, args, sc, line, col):
        s = self._str(args[0], sc)
        if args[1][0] != "var":
            raise HexSyntaxError("split() needs an array name as second argument", line, col)
        arr = self.array_ref(args[1][1], sc)
        if len(args) > 2:
            sep_node = args[2]
            if sep_node[0] == "ere":
                rx = self.regex_of(sep_node, sc)
                sep = lambda fr: rx(fr)  # noqa: E731
            else:
                sep = self._str(sep_node, sc)
        else:
            fs = self.gslots["FS"]
            G = self.G
            sep = lambda fr: self.tostr(G[fs])  # noqa: E731

        def split(fr):
            text = s(fr)
            a = arr(fr)
            fsv = sep(fr)
            a.clear()
            if text == "":
                return 0.0
            if isinstance(fsv, ere.Regex):
                pieces = self._regex_split(text, fsv)
            elif fsv == " ":
                pieces = _WS_RUN.findall(text)
            elif fsv == "":
                pieces = list(text)
            elif len(fsv) == 1 and fsv != "\\":
                pieces = text.split(fsv)
            else:
                try:
                    rx = ere.compile_regex(fsv)
                except ere.RegexError as exc:
                    raise HexRuntimeError(str(exc)) from None
                pieces = self._regex_split(text, rx)
            for i, p in enumerate(pieces, start=1):
                a[str(i)] = make_strnum(p)
            return float(len(pieces))

        return split

    @staticmethod
    def _regex_split(text: str, rx) -> list:
        pieces = []
        pos = 0
        start = 0
        while pos <= len(text):
            m = rx.search(text, pos)
            if m is None:
                break
            b, e = m
            if e == b:
                # empty separator matches do not split
                pos = b + 1
                continue
            pieces.append(text[start:b])
            start = pos = e
        pieces.append(text[start:])
        return pieces

    def _sub(self, args, sc, line, col, global_: bool):
        rx = self.regex_of(args[0], sc)
        repl = self._str(args[1], sc)
        target = args[2]
        if target[0] not in ("var", "index", "group"):
            raise HexSyntaxError("sub/gsub target must be a variable", line, col)
        get, put, kind = self.lvalue(target, sc)
        tostr = self.tostr

        if kind == "index":
            arr, key = get, put

            def read(fr):
                a = arr(fr)
                k = key(fr)
                return (a, k), a.get(k, UNINIT)

            def write(loc, v):
                a, k = loc
                a[k] = v
        else:

            def read(fr):
                return fr, get(fr)

            def write(loc, v):
                put(loc, v)

        def sub(fr):
            r = rx(fr)
            rep = repl(fr)
            loc, cur = read(fr)
            text = tostr(cur)
            out = []
            count = 0
            pos = 0
            n = len(text)
            last_end = -1
            while pos <= n:
                m = r.search(text, pos)
                if m is None:
                    break
                b, e = m
                if b == e and b == last_end:
                    # no empty match right after the previous match
                    if b < n:
                        out.append(text[pos:b + 1])
                    pos = b + 1
                    continue
                out.append(text[pos:b])
                out.append(_expand_repl(rep, text[b:e]))
                count += 1
                last_end = e
                if e == b:
                    if b < n:
                        out.append(text[b])
                    pos = b + 1
                else:
                    pos = e
                if not global_:
                    break
            if count == 0:
                return 0.0
            if pos <= n:
                out.append(text[pos:])
            write(loc, "".join(out))
            return float(count)

        return sub

    def b_sub(self, args, sc, line, col):
        return self._sub(args, sc, line, col, global_=False)

    def b_gsub(self, args, sc, line, col):
        return self._sub(args, sc, line, col, global_=True)

    def b_match(self, args, sc, line, col):
        s = self._str(args[0], sc)
        rx = self.regex_of(args[1], sc)
        G = self.G
        rstart, rlength = self.gslots["RSTART"], self.gslots["RLENGTH"]

        def match(fr):
            m = rx(fr).search(s(fr))
            if m is None:
                G[rstart] = 0.0
                G[rlength] = -1.0
            else:
                G[rstart] = float(m[0] + 1)
                G[rlength] = float(m[1] - m[0])
            return G[rstart]

        return match

    def b_sprintf(self, args, sc, line, col):
        fns = [self.expr(a, sc) for a in args]

        def sprintf_(fr):
            vals = [f(fr) for f in fns]
            return sprintf(self.tostr(vals[0]), vals[1:], self.convfmt())

        return sprintf_

    def b_tolower(self, args, sc, line, col):
        s = self._str(args[0], sc)
        return lambda fr: s(fr).translate(_LOWER)

    def b_toupper(self, args, sc, line, col):
        s = self._str(args[0], sc)
        return lambda fr: s(fr).translate(_UPPER)

    def b_int(self, args, sc, line, col):
        x = self._num(args[0], sc)

        def int_(fr):
            v = x(fr)
            return float(math.trunc(v)) if math.isfinite(v) else v

        return int_

    def _math1(self, args, sc, fn):
        x = self._num(args[0], sc)

        def m(fr):
            try:
                return fn(x(fr))
            except ValueError:
                return math.nan
            except OverflowError:
                return math.inf

        return m

    def b_sqrt(self, args, sc, line, col):
        return self._math1(args, sc, math.sqrt)

    def b_exp(self, args, sc, line, col):
        return self._math1(args, sc, math.exp)

    def b_log(self, args, sc, line, col):
        def log(v):
            if v == 0:
                return -math.inf
            return math.log(v)

        return self._math1(args, sc, log)

    def b_sin(self, args, sc, line, col):
        return self._math1(args, sc, math.sin)

    def b_cos(self, args, sc, line, col):
        return self._math1(args, sc, math.cos)

    def b_atan2(self, args, sc, line, col):
        y, x = self._num(args[0], sc), self._num(args[1], sc)
        return lambda fr: math.atan2(y(fr), x(fr))

    def b_rand(self, args, sc, line, col):
        return lambda fr: self.rng.random()

    def b_srand(self, args, sc, line, col):
        x = self._num(args[0], sc) if args else None

        def srand(fr):
            prev = self.seed
            self.seed = x(fr) if x is not None else 0.0
            self.rng.seed(self.seed)
            return prev

        return srand

    # DOM built-ins: every failure is the in-band zero value
    def _node(self, node, sc):
        e = self.expr(node, sc)

        def nid(fr):
            v = e(fr)
            if isinstance(v, HexArray):
                return 0
            x = to_num(v)
            if not math.isfinite(x) or x != int(x):
                return 0
            return int(x)

        return nid

    def b_root(self, args, sc, line, col):
        has_tree = self.tree is not None
        return lambda fr: 1.0 if has_tree else 0.0

    def _nav(self, args, sc, axis):
        n = self._node(args[0], sc)
        tree = self.tree
        if tree is None:
            return lambda fr: 0.0
        nav = getattr(tree, axis)
        return lambda fr: float(nav(n(fr)))

    def b_parent(self, args, sc, line, col):
        return self._nav(args, sc, "parent")

    def b_sister(self, args, sc, line, col):
        return self._nav(args, sc, "sister")

    def b_children(self, args, sc, line, col):
        return self._nav(args, sc, "children")

    def b_type(self, args, sc, line, col):
        n = self._node(args[0], sc)
        tree = self.tree

        def type_(fr):
            if tree is None:
                return UNINIT
            return tree.kind(n(fr)) or UNINIT

        return type_

    def b_name(self, args, sc, line, col):
        n = self._node(args[0], sc)
        tree = self.tree

        def name(fr):
            if tree is None:
                return UNINIT
            return tree.name(n(fr)) or UNINIT

        return name

    def b_text(self, args, sc, line, col):
        n = self._node(args[0], sc)
        tree = self.tree

        def text(fr):
            if tree is None:
                return UNINIT
            i = n(fr)
            if tree.kind(i) != TEXT:
                return UNINIT
            return tree.text(i).decode("latin-1")

        return text

    def b_attr(self, args, sc, line, col):
        n = self._node(args[0], sc)
        a = self._str(args[1], sc)
        tree = self.tree

        def attr(fr):
            if tree is None:
                return UNINIT
            i = n(fr)
            key = a(fr)
            if tree.kind(i) != ELEMENT or not tree.has_attr(i, key):
                return UNINIT
            return tree.attr(i, key).decode("latin-1")

        return attr

    def b_selmatch(self, args, sc, line, col):
        n = self._node(args[0], sc)
        s = self._str(args[1], sc)
        tree = self.tree

        def selmatch(fr):
            i = n(fr)
            text = s(fr)
            if tree is None:
                return 0.0
            try:
                sel = parse_selector(text.encode("latin-1").decode("utf-8", "replace"))
            except SelectorError as exc:
                self.warn(f"selmatch: {exc}")
                return 0.0
            return 1.0 if selector_matches(tree, i, sel) else 0.0

        return selmatch

    def b_seconds(self, args, sc, line, col):
        s = self._str(args[0], sc)
        return lambda fr: parse_seconds(s(fr))


def _expand_repl(rep: str, matched: str) -> str:
    if "&" not in rep and "\\" not in rep:
        return rep
    out = []
    i = 0
    n = len(rep)
    while i < n:
        c = rep[i]
        if c == "\\" and i + 1 < n and rep[i + 1] in "&\\":
            out.append(rep[i + 1])
            i += 2
            continue
        if c == "&":
            out.append(matched)
        else:
            out.append(c)
        i += 1
    return "".join(out)

