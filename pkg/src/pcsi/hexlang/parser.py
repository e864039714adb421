"""Recursive-descent parser producing a tuple-based AST.

Expression nodes are tuples whose first element names the node kind; see
``compiler.py`` for how each is evaluated.  Only BEGIN blocks and function
definitions are accepted at top level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .lexer import BUILTINS, EXCLUDED_BUILTINS, HexSyntaxError, Token, tokenize

ASSIGN_OPS = frozenset(["=", "+=", "-=", "*=", "/=", "%=", "^=", "**="])
REL_OPS = frozenset(["<", "<=", "==", "!=", ">", ">="])
_CONCAT_START = frozenset(
    ["NUMBER", "STRING", "ERE", "NAME", "FUNC_NAME", "BUILTIN", "(", "$", "++", "--", "!", "-", "+"]
)
_NO_CONCAT_UNARY = frozenset(["!", "-", "+"])


@dataclass
class FunctionDef:
    name: str
    params: list
    body: tuple
    line: int


@dataclass
class ProgramAST:
    begin: list = field(default_factory=list)  # list of statement blocks
    functions: dict = field(default_factory=dict)


def _is_lvalue(node) -> bool:
    return node[0] in ("var", "index", "field")


class Parser:
    def __init__(self, src: str):
        self.toks: list[Token] = tokenize(src)
        self.pos = 0

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.toks[self.pos]
        if self.pos < len(self.toks) - 1:
            self.pos += 1
        return t

    def at(self, *kinds) -> bool:
        return self.tok.kind in kinds

    def error(self, msg: str, tok: Token | None = None):
        t = tok or self.tok
        raise HexSyntaxError(msg, t.line, t.col)

    def expect(self, kind: str) -> Token:
        if self.tok.kind != kind:
            found = self.tok.value if self.tok.value is not None else self.tok.kind
            self.error(f"expected {kind!r}, found {found!r}")
        return self.advance()

    def skip_newlines(self):
        while self.tok.kind == "NEWLINE":
            self.advance()

    def skip_terminators(self):
        while self.tok.kind in ("NEWLINE", ";"):
            self.advance()

    # -- program
    def parse_program(self) -> ProgramAST:
        prog = ProgramAST()
        self.skip_terminators()
        while not self.at("EOF"):
            t = self.tok
            if t.kind == "BEGIN":
                self.advance()
                self.skip_newlines()
                if not self.at("{"):
                    self.error("expected '{' after BEGIN")
                prog.begin.append(self.block())
            elif t.kind in ("function", "func"):
                fn = self.function_def()
                if fn.name in prog.functions:
                    self.error(f"function {fn.name!r} redefined", t)
                prog.functions[fn.name] = fn
            elif t.kind == "END":
                self.error("END rules are not supported: only BEGIN and functions are allowed")
            else:
                self.error(
                    "pattern-action rules are not supported; "
                    "only BEGIN and function definitions are allowed"
                )
            self.skip_terminators()
        return prog

    def function_def(self) -> FunctionDef:
        start = self.advance()
        t = self.advance()
        if t.kind == "BUILTIN":
            self.error(f"cannot redefine built-in function {t.value!r}", t)
        if t.kind not in ("NAME", "FUNC_NAME"):
            self.error("expected function name", t)
        name = t.value
        self.expect("(")
        params: list[str] = []
        while not self.at(")"):
            p = self.tok
            if p.kind == "BUILTIN":
                self.error(f"built-in name {p.value!r} used as parameter", p)
            if p.kind != "NAME":
                self.error("expected parameter name")
            self.advance()
            if p.value in params:
                self.error(f"duplicate parameter {p.value!r}", p)
            if p.value == name:
                self.error("parameter shadows function name", p)
            params.append(p.value)
            if self.at(","):
                self.advance()
            elif not self.at(")"):
                self.error("expected ',' or ')' in parameter list")
        self.advance()
        self.skip_newlines()
        if not self.at("{"):
            self.error("expected '{' to open function body")
        body = self.block()
        return FunctionDef(name, params, body, start.line)

    # -- statements
    def block(self):
        self.expect("{")
        stmts = []
        self.skip_terminators()
        while not self.at("}"):
            if self.at("EOF"):
                self.error("missing '}'")
            stmts.append(self.statement())
            self.skip_terminators()
        self.advance()
        return ("block", stmts)

    def end_simple(self):
        if self.at(";", "NEWLINE"):
            self.advance()
        elif not self.at("}", "EOF"):
            found = self.tok.value if self.tok.value is not None else self.tok.kind
            self.error(f"unexpected {found!r}")

    def body_statement(self):
        self.skip_newlines()
        if self.at(";"):
            self.advance()
            return ("block", [])
        return self.statement()

    def statement(self):
        t = self.tok
        k = t.kind
        if k == "{":
            return self.block()
        if k == ";":
            self.advance()
            return ("block", [])
        if k == "if":
            self.advance()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then = self.body_statement()
            save = self.pos
            self.skip_terminators()
            if self.at("else"):
                self.advance()
                other = self.body_statement()
                return ("if", cond, then, other)
            self.pos = save
            return ("if", cond, then, None)
        if k == "while":
            self.advance()
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            if self.at(";"):
                self.advance()
                return ("while", cond, ("block", []))
            return ("while", cond, self.body_statement())
        if k == "do":
            self.advance()
            body = self.body_statement()
            self.skip_terminators()
            self.expect("while")
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            self.end_simple()
            return ("do", body, cond)
        if k == "for":
            return self.for_statement()
        if k in ("break", "continue"):
            self.advance()
            self.end_simple()
            return (k,)
        if k in ("next", "nextfile"):
            self.error(f"'{k}' is not available: Hex has no input records")
        if k == "getline":
            self.error("getline is not available in Hex")
        node = self.simple_statement()
        self.end_simple()
        return node

    def for_statement(self):
        self.advance()
        self.expect("(")
        if (
            self.at("NAME")
            and self.peek().kind == "in"
            and self.peek(2).kind == "NAME"
            and self.peek(3).kind == ")"
        ):
            var = self.advance().value
            self.advance()
            arr = self.advance().value
            self.advance()
            return ("forin", var, arr, self.body_statement())
        if (
            self.at("(")
            and self.peek().kind == "NAME"
            and self.peek(2).kind == "in"
            and self.peek(3).kind == "NAME"
            and self.peek(4).kind == ")"
            and self.peek(5).kind == ")"
        ):
            self.advance()
            var = self.advance().value
            self.advance()
            arr = self.advance().value
            self.advance()
            self.advance()
            return ("forin", var, arr, self.body_statement())
        init = None if self.at(";") else self.simple_statement()
        self.expect(";")
        self.skip_newlines()
        cond = None if self.at(";") else self.expr()
        self.expect(";")
        self.skip_newlines()
        step = None if self.at(")") else self.simple_statement()
        self.expect(")")
        if self.at(";"):
            self.advance()
            return ("for", init, cond, step, ("block", []))
        return ("for", init, cond, step, self.body_statement())

    def simple_statement(self):
        t = self.tok
        k = t.kind
        if k in ("print", "printf"):
            self.advance()
            args = self.print_args()
            if self.at(">", ">>", "|"):
                self.error("output redirection is not available in Hex")
            if k == "printf" and not args:
                self.error("printf needs a format")
            return (k, args)
        if k == "delete":
            self.advance()
            name = self.expect("NAME").value
            if self.at("["):
                self.advance()
                subs = self.expr_list()
                self.expect("]")
                return ("delete", name, subs)
            return ("delete", name, None)
        if k == "exit":
            self.advance()
            e = None if self.at(";", "NEWLINE", "}", "EOF") else self.expr()
            return ("exit", e)
        if k == "return":
            self.advance()
            e = None if self.at(";", "NEWLINE", "}", "EOF") else self.expr()
            return ("return", e)
        return ("expr", self.expr())

    def print_args(self):
        if self.at(";", "NEWLINE", "}", "EOF", ">", ">>", "|"):
            return []
        if self.at("("):
            # print (a, b) form: grouping list followed by end of statement
            save = self.pos
            self.advance()
            try:
                items = self.expr_list()
                if self.at(")"):
                    self.advance()
                    if self.at(";", "NEWLINE", "}", "EOF", ">", ">>", "|"):
                        return items
            except HexSyntaxError:
                pass
            self.pos = save
        return self.expr_list(no_gt=True)

    # -- expressions
    def expr_list(self, no_gt: bool = False):
        items = [self.expr(no_gt)]
        while self.at(","):
            self.advance()
            items.append(self.expr(no_gt))
        return items

    def expr(self, no_gt: bool = False):
        left = self.ternary(no_gt)
        if self.tok.kind in ASSIGN_OPS:
            if not _is_lvalue(left):
                self.error("assignment to non-lvalue")
            op = self.advance().kind
            if op == "**=":
                op = "^="
            right = self.expr(no_gt)
            return ("assign", op, left, right)
        return left

    def ternary(self, no_gt):
        cond = self.or_expr(no_gt)
        if self.at("?"):
            self.advance()
            self.skip_newlines()
            a = self.expr(no_gt)
            self.skip_newlines()
            self.expect(":")
            self.skip_newlines()
            b = self.expr(no_gt)
            return ("cond", cond, a, b)
        return cond

    def or_expr(self, no_gt):
        left = self.and_expr(no_gt)
        while self.at("||"):
            self.advance()
            left = ("or", left, self.and_expr(no_gt))
        return left

    def and_expr(self, no_gt):
        left = self.in_expr(no_gt)
        while self.at("&&"):
            self.advance()
            left = ("and", left, self.in_expr(no_gt))
        return left

    def in_expr(self, no_gt):
        left = self.match_expr(no_gt)
        while self.at("in"):
            self.advance()
            name = self.expect("NAME").value
            left = ("in", [left], name)
        return left

    def match_expr(self, no_gt):
        left = self.rel_expr(no_gt)
        while self.at("~", "!~"):
            neg = self.advance().kind == "!~"
            left = ("match", neg, left, self.rel_expr(no_gt))
        return left

    def rel_expr(self, no_gt):
        left = self.concat_expr(no_gt)
        k = self.tok.kind
        if k in REL_OPS and not (no_gt and k == ">"):
            self.advance()
            left = ("cmp", k, left, self.concat_expr(no_gt))
        return left

    def concat_expr(self, no_gt):
        left = self.additive()
        while self.tok.kind in _CONCAT_START and self.tok.kind not in _NO_CONCAT_UNARY:
            if self.at("in"):
                break
            left = ("concat", left, self.additive())
        return left

    def additive(self):
        left = self.multiplicative()
        while self.at("+", "-"):
            op = self.advance().kind
            left = ("binop", op, left, self.multiplicative())
        return left

    def multiplicative(self):
        left = self.unary()
        while self.at("*", "/", "%"):
            op = self.advance().kind
            left = ("binop", op, left, self.unary())
        return left

    def unary(self):
        if self.at("!"):
            self.advance()
            return ("not", self.unary())
        if self.at("-"):
            self.advance()
            return ("neg", self.unary())
        if self.at("+"):
            self.advance()
            return ("pos", self.unary())
        return self.power()

    def power(self):
        base = self.postfix()
        if self.at("^", "**"):
            self.advance()
            # right associative; the exponent may carry its own sign
            if self.at("-", "+", "!"):
                exp = self.unary()
            else:
                exp = self.power()
            return ("binop", "^", base, exp)
        return base

    def postfix(self):
        node = self.primary()
        if self.at("++", "--") and _is_lvalue(node):
            op = self.advance().kind
            return ("postinc", op, node)
        return node

    def primary(self):
        t = self.tok
        k = t.kind
        if k == "NUMBER":
            self.advance()
            return ("num", t.value)
        if k == "STRING":
            self.advance()
            return ("str", t.value)
        if k == "ERE":
            self.advance()
            return ("ere", t.value, t.line, t.col)
        if k in ("++", "--"):
            self.advance()
            target = self.primary()
            if not _is_lvalue(target):
                self.error(f"{k} needs a variable")
            return ("preinc", k, target)
        if k == "-":
            self.advance()
            return ("neg", self.unary())
        if k == "!":
            self.advance()
            return ("not", self.unary())
        if k == "$":
            self.advance()
            return ("field", self.primary())
        if k == "(":
            self.advance()
            items = self.expr_list()
            self.expect(")")
            if len(items) > 1:
                if not self.at("in"):
                    self.error("parenthesized list must be followed by 'in'")
                self.advance()
                name = self.expect("NAME").value
                return ("in", items, name)
            return ("group", items[0])
        if k == "NAME":
            self.advance()
            if self.at("["):
                self.advance()
                subs = self.expr_list()
                self.expect("]")
                return ("index", t.value, subs)
            return ("var", t.value)
        if k == "FUNC_NAME":
            self.advance()
            self.expect("(")
            args = [] if self.at(")") else self.expr_list()
            self.expect(")")
            return ("call", t.value, args, t.line, t.col)
        if k == "BUILTIN":
            return self.builtin_call()
        if k == "getline":
            self.error("getline is not available in Hex")
        found = t.value if t.value is not None else t.kind
        self.error(f"unexpected {found!r}")

    def builtin_call(self):
        t = self.advance()
        name = t.value
        if name in EXCLUDED_BUILTINS:
            self.error(f"{name}() is not available in Hex", t)
        if not self.at("("):
            if name == "length":
                return ("builtin", "length", [], t.line, t.col)
            self.error(f"built-in {name!r} must be called with '('", t)
        self.advance()
        args = [] if self.at(")") else self.expr_list()
        self.expect(")")
        return ("builtin", name, args, t.line, t.col)


def parse(src: str) -> ProgramAST:
    prog = Parser(src).parse_program()
    for fn in prog.functions.values():
        if fn.name in BUILTINS:
            raise HexSyntaxError(f"cannot redefine built-in function {fn.name!r}", fn.line, 1)
    return prog
