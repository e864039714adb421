"""Tokenizer for Hex source (Awk lexical conventions)."""

from __future__ import annotations

from dataclasses import dataclass

KEYWORDS = frozenset(
    "BEGIN END function func if else while for do break continue next nextfile "
    "exit return delete in getline print printf".split()
)

# built-ins callable without a user definition; all are reserved words
STRING_BUILTINS = frozenset(
    "length substr index split sub gsub match sprintf tolower toupper "
    "int sqrt exp log sin cos atan2 rand srand".split()
)
DOM_BUILTINS = frozenset("root parent sister children type name text attr selmatch seconds".split())
EXCLUDED_BUILTINS = frozenset("system close fflush".split())
BUILTINS = STRING_BUILTINS | DOM_BUILTINS

# operators, longest first
_OPERATORS = [
    "&&", "||", "==", "<=", ">=", "!=", "++", "--", "+=", "-=", "*=", "/=", "%=", "^=",
    "!~", ">>", "**=", "**",
    "{", "}", "(", ")", "[", "]", ";", ",", "+", "-", "*", "/", "%", "^", "!", ">", "<",
    "|", "?", ":", "~", "$", "=",
]

# after these a newline carries no meaning
_NEWLINE_OK_AFTER = frozenset(["{", "&&", "||", ",", "do", "else"])

_STRING_ESCAPES = {
    "n": "\n", "t": "\t", "r": "\r", "f": "\f", "v": "\v", "b": "\b", "a": "\a",
    "\\": "\\", '"': '"',
}


class HexSyntaxError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"syntax error at line {line}, column {col}: {message}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str  # NAME FUNC_NAME BUILTIN NUMBER STRING ERE NEWLINE EOF KEYWORD or operator text
    value: object
    line: int
    col: int

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.value!r}, {self.line}:{self.col})"


def _regex_allowed(prev: Token | None) -> bool:
    if prev is None:
        return True
    if prev.kind in ("NAME", "NUMBER", "STRING", "ERE", "BUILTIN"):
        return False
    if prev.kind in (")", "]", "$", "++", "--"):
        return False
    return True


def tokenize(src: str) -> list[Token]:
    toks: list[Token] = []
    i = 0
    n = len(src)
    line = 1
    line_start = 0

    def add(kind, value, start):
        toks.append(Token(kind, value, line, start - line_start + 1))

    while i < n:
        c = src[i]
        if c in " \t\r\f\v":
            i += 1
            continue
        if c == "\\" and i + 1 < n and src[i + 1] == "\n":
            i += 2
            line += 1
            line_start = i
            continue
        if c == "\\" and src.startswith("\r\n", i + 1):
            i += 3
            line += 1
            line_start = i
            continue
        if c == "#":
            while i < n and src[i] != "\n":
                i += 1
            continue
        if c == "\n":
            prev = toks[-1] if toks else None
            if prev is not None and prev.kind != "NEWLINE" and prev.kind not in _NEWLINE_OK_AFTER:
                add("NEWLINE", None, i)
            i += 1
            line += 1
            line_start = i
            continue
        start = i
        if c.isdigit() or (c == "." and i + 1 < n and src[i + 1].isdigit()):
            j = i
            while j < n and src[j].isdigit():
                j += 1
            if j < n and src[j] == ".":
                j += 1
                while j < n and src[j].isdigit():
                    j += 1
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                if k < n and src[k].isdigit():
                    while k < n and src[k].isdigit():
                        k += 1
                    j = k
            add("NUMBER", float(src[i:j]), start)
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            word = src[i:j]
            if word in KEYWORDS:
                add(word, word, start)
            elif word in BUILTINS or word in EXCLUDED_BUILTINS:
                add("BUILTIN", word, start)
            elif j < n and src[j] == "(":
                add("FUNC_NAME", word, start)
            else:
                add("NAME", word, start)
            i = j
            continue
        if c == '"':
            j = i + 1
            buf = []
            while True:
                if j >= n or src[j] == "\n":
                    raise HexSyntaxError("unterminated string", line, start - line_start + 1)
                ch = src[j]
                if ch == '"':
                    j += 1
                    break
                if ch == "\\" and j + 1 < n:
                    e = src[j + 1]
                    if e in _STRING_ESCAPES:
                        buf.append(_STRING_ESCAPES[e])
                        j += 2
                    elif e in "01234567":
                        k = j + 1
                        while k < n and k < j + 4 and src[k] in "01234567":
                            k += 1
                        buf.append(chr(int(src[j + 1:k], 8) & 0xFF))
                        j = k
                    elif e == "\n":
                        j += 2
                        line += 1
                        line_start = j
                    else:
                        # unknown escapes keep their backslash, so "\." still means a literal dot in a regex
                        buf.append("\\" + e)
                        j += 2
                    continue
                buf.append(ch)
                j += 1
            add("STRING", "".join(buf), start)
            i = j
            continue
        if c == "/" and _regex_allowed(toks[-1] if toks else None):
            j = i + 1
            buf = []
            in_bracket = False
            while True:
                if j >= n or src[j] == "\n":
                    raise HexSyntaxError("unterminated regex", line, start - line_start + 1)
                ch = src[j]
                if ch == "\\" and j + 1 < n:
                    if src[j + 1] == "/":
                        buf.append("/")
                    else:
                        buf.append(src[j:j + 2])
                    j += 2
                    continue
                if ch == "[" and not in_bracket:
                    in_bracket = True
                    buf.append(ch)
                    j += 1
                    # a leading ] (or ^]) is literal inside brackets
                    if j < n and src[j] == "^":
                        buf.append("^")
                        j += 1
                    if j < n and src[j] == "]":
                        buf.append("]")
                        j += 1
                    continue
                if ch == "]" and in_bracket:
                    in_bracket = False
                elif ch == "/" and not in_bracket:
                    j += 1
                    break
                buf.append(ch)
                j += 1
            add("ERE", "".join(buf), start)
            i = j
            continue
        for op in _OPERATORS:
            if src.startswith(op, i):
                add(op, op, start)
                i += len(op)
                break
        else:
            raise HexSyntaxError(f"unexpected character {c!r}", line, start - line_start + 1)
    add("NEWLINE", None, n)
    add("EOF", None, n)
    return toks
