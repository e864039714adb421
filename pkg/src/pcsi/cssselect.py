"""A small CSS selector subset: type, ``*``, ``#id``, ``.class``, ``[a]``,
``[a=v]``, joined by descendant and ``>`` combinators, with comma lists.

Matching walks from the candidate node up through its ancestors only.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

from .htmldom import ELEMENT, DomTree

DESCENDANT = " "
CHILD = ">"


class SelectorError(ValueError):
    def __init__(self, message: str, token: str = ""):
        super().__init__(message)
        self.token = token


@dataclass(frozen=True)
class Compound:
    tag: str | None = None  # None means universal
    ids: tuple = ()
    classes: tuple = ()
    attrs: tuple = ()  # (name, value-or-None)

    def matches(self, tree: DomTree, n: int) -> bool:
        return _compound_match(tree, n, self)


@dataclass(frozen=True)
class Complex:
    # compounds[0] is leftmost; combinators[i] joins compounds[i] and compounds[i+1]
    compounds: tuple
    combinators: tuple


@dataclass(frozen=True)
class Selector:
    alternatives: tuple

    def matches(self, tree: DomTree, n: int) -> bool:
        return selector_matches(tree, n, self)


_IDENT = r"-?[_a-zA-Z\x80-\uffff][_a-zA-Z0-9\x80-\uffff-]*"
_TOKEN_RE = re.compile(
    rf"""
    (?P<ws>\s+)
  | (?P<comma>,)
  | (?P<child>>)
  | (?P<star>\*)
  | (?P<type>{_IDENT})
  | \#(?P<id>-?[_a-zA-Z0-9\x80-\uffff-]+)
  | \.(?P<cls>{_IDENT})
  | \[\s*(?P<aname>{_IDENT})\s*
        (?:=\s*(?:"(?P<dq>[^"\\]*)"|'(?P<sq>[^'\\]*)'|(?P<bare>{_IDENT}))\s*)?\]
    """,
    re.VERBOSE,
)


def _bad_token(s: str, pos: int) -> SelectorError:
    m = re.compile(r"[^\s,>]+").match(s, pos)
    tok = m.group(0) if m else s[pos:pos + 1]
    return SelectorError(f"unsupported selector syntax {tok!r} at {pos}", tok)


@lru_cache(maxsize=512)
def parse_selector(s: str) -> Selector:
    alternatives = []
    compounds: list[Compound] = []
    combinators: list[str] = []
    cur: dict | None = None
    pending = None  # combinator seen since last compound
    pos = 0

    def end_compound():
        nonlocal cur
        if cur is not None:
            compounds.append(
                Compound(cur["tag"], tuple(cur["ids"]), tuple(cur["classes"]), tuple(cur["attrs"]))
            )
            cur = None

    def end_complex():
        nonlocal compounds, combinators, pending
        end_compound()
        if not compounds or pending == CHILD:
            raise SelectorError(f"empty selector in {s!r}")
        alternatives.append(Complex(tuple(compounds), tuple(combinators)))
        compounds, combinators, pending = [], [], None

    while pos < len(s):
        m = _TOKEN_RE.match(s, pos)
        if not m:
            raise _bad_token(s, pos)
        kind = m.lastgroup if m.lastgroup not in ("dq", "sq", "bare") else "aname"
        pos = m.end()
        if kind == "ws":
            if cur is not None:
                end_compound()
                pending = pending or DESCENDANT
            continue
        if kind == "comma":
            end_complex()
            continue
        if kind == "child":
            end_compound()
            if not compounds or pending == CHILD:
                raise SelectorError(f"misplaced '>' in {s!r}", ">")
            pending = CHILD
            continue
        if cur is None:
            if compounds:
                combinators.append(pending or DESCENDANT)
            pending = None
            cur = {"tag": None, "ids": [], "classes": [], "attrs": []}
        if kind in ("star", "type"):
            if cur["ids"] or cur["classes"] or cur["attrs"] or cur.get("typed"):
                raise _bad_token(s, m.start())
            cur["typed"] = True
            cur["tag"] = None if kind == "star" else m.group("type").lower()
        elif kind == "id":
            cur["ids"].append(m.group("id"))
        elif kind == "cls":
            cur["classes"].append(m.group("cls"))
        else:
            value = m.group("dq")
            if value is None:
                value = m.group("sq")
            if value is None:
                value = m.group("bare")
            cur["attrs"].append((m.group("aname").lower(), value))
    end_complex()
    return Selector(tuple(alternatives))


def _match_complex(tree: DomTree, n: int, cx: Complex) -> bool:
    comps = cx.compounds
    if not _compound_match(tree, n, comps[-1]):
        return False
    return _match_left(tree, n, len(comps) - 2, cx)


def _match_left(tree: DomTree, n: int, k: int, cx: Complex) -> bool:
    """Can compounds[0..k] be satisfied by ancestors of n (n matched compounds[k+1])?"""
    if k < 0:
        return True
    comb = cx.combinators[k]
    comp = cx.compounds[k]
    p = tree.parent(n)
    while p:
        if _compound_match(tree, p, comp) and _match_left(tree, p, k - 1, cx):
            return True
        if comb == CHILD:
            return False
        p = tree.parent(p)
    return False


def _compound_match(tree: DomTree, n: int, comp: Compound) -> bool:
    if tree.kind(n) != ELEMENT:
        return False
    if comp.tag is not None and tree.name(n) != comp.tag:
        return False
    for i in comp.ids:
        if tree.attr(n, "id") != i.encode("utf-8"):
            return False
    if comp.classes:
        have = tree.attr(n, "class").split()
        for c in comp.classes:
            if c.encode("utf-8") not in have:
                return False
    for name, value in comp.attrs:
        if not tree.has_attr(n, name):
            return False
        if value is not None and tree.attr(n, name) != value.encode("utf-8"):
            return False
    return True


def selector_matches(tree: DomTree, n: int, sel) -> bool:
    if isinstance(sel, str):
        sel = parse_selector(sel)
    if tree.kind(n) != ELEMENT:
        return False
    return any(_match_complex(tree, n, cx) for cx in sel.alternatives)
