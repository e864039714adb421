"""printf-style formatting with Awk argument coercion."""

from __future__ import annotations

import math
import re

from .values import to_num, to_str

_SPEC = re.compile(r"%([-+ #0]*)(\*|\d+)?(?:\.(\*|\d*))?([a-zA-Z%])?")


def _c_int(x: float) -> int:
    if math.isnan(x) or math.isinf(x):
        return 0
    return int(x)


def sprintf(fmt: str, args: list, convfmt: str = "%.6g") -> str:
    out = []
    i = 0
    argi = 0
    n = len(fmt)

    def next_arg():
        nonlocal argi
        if argi < len(args):
            v = args[argi]
            argi += 1
            return v
        return None

    while i < n:
        j = fmt.find("%", i)
        if j < 0:
            out.append(fmt[i:])
            break
        out.append(fmt[i:j])
        m = _SPEC.match(fmt, j)
        conv = m.group(4)
        if conv is None:
            out.append(fmt[j:m.end()])
            i = m.end()
            continue
        if conv == "%":
            out.append("%")
            i = m.end()
            continue
        flags, width, prec = m.group(1), m.group(2), m.group(3)
        if width == "*":
            w = _c_int(to_num(next_arg() or 0.0))
            if w < 0:
                flags += "-"
                w = -w
            width = str(w)
        if prec == "*":
            p = _c_int(to_num(next_arg() or 0.0))
            prec = str(p) if p >= 0 else None
        spec = "%" + flags + (width or "") + ("." + prec if prec is not None else "")
        arg = next_arg()
        if conv not in "cdiouxXeEfFgGs":
            out.append(fmt[j:m.end()])
            i = m.end()
            continue
        if conv == "c":
            if arg is None:
                ch = ""
            elif type(arg) is float:
                ch = chr(_c_int(arg) & 0xFF)
            else:
                ch = to_str(arg, convfmt)[:1]
            out.append(("%" + flags + (width or "") + "s") % ch)
        elif conv in "di":
            x = to_num(arg) if arg is not None else 0.0
            if math.isnan(x) or math.isinf(x):
                out.append((spec + "s") % ("nan" if math.isnan(x) else ("-inf" if x < 0 else "inf")))
            else:
                out.append((spec + "d") % int(x))
        elif conv in "ouxX":
            x = to_num(arg) if arg is not None else 0.0
            v = _c_int(x)
            if v < 0:
                v &= 0xFFFFFFFFFFFFFFFF
            if conv == "u":
                out.append((spec + "d") % v)
            elif conv == "o" and "#" in flags:
                body = (spec.replace("#", "") + "o") % v
                out.append(body if body.lstrip().startswith("0") else _pad_alt_octal(body))
            else:
                out.append((spec + conv) % v)
        elif conv in "eEfFgG":
            x = to_num(arg) if arg is not None else 0.0
            out.append((spec + conv) % x)
        else:  # s
            s = "" if arg is None else to_str(arg, convfmt)
            out.append((spec + "s") % s)
        i = m.end()
    return "".join(out)


def _pad_alt_octal(body: str) -> str:
    stripped = body.lstrip(" ")
    pad = len(body) - len(stripped)
    if pad:
        return " " * (pad - 1) + "0" + stripped
    return "0" + body
