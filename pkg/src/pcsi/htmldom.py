"""Tolerant HTML parsing into an immutable, integer-addressed node tree.

Node 1 is the ROOT; every other node gets the next ID in document
(pre-order) order.  0 means "no node" and every accessor returns an empty
value for it instead of raising.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from html.parser import HTMLParser
from typing import Iterator, Optional

ELEMENT = "ELEMENT"
TEXT = "TEXT"
COMMENT = "COMMENT"
DECLARATION = "DECLARATION"
PROCINS = "PROCINS"
ROOT = "ROOT"

VOID_ELEMENTS = frozenset(
    "area base basefont bgsound br col embed frame hr img input keygen link "
    "meta param source track wbr".split()
)
RAW_TEXT_ELEMENTS = frozenset(["script", "style"])

# start tags that implicitly close an open <p>
_CLOSES_P = frozenset(
    "address article aside blockquote center details dialog dir div dl fieldset "
    "figcaption figure footer form h1 h2 h3 h4 h5 h6 header hgroup hr li listing "
    "main menu nav ol p pre section summary table ul dd dt".split()
)
_HEADINGS = frozenset("h1 h2 h3 h4 h5 h6".split())
_SCOPE_BOUNDARY = frozenset("applet caption html table td th marquee object template button".split())
# tag -> (tags it closes, tags that stop the search)
_IMPLIED_END = {
    "li": (frozenset(["li"]), frozenset(["ol", "ul", "menu"]) | _SCOPE_BOUNDARY),
    "dt": (frozenset(["dt", "dd"]), frozenset(["dl"]) | _SCOPE_BOUNDARY),
    "dd": (frozenset(["dt", "dd"]), frozenset(["dl"]) | _SCOPE_BOUNDARY),
    "option": (frozenset(["option"]), frozenset(["select", "datalist", "optgroup"])),
    "optgroup": (frozenset(["optgroup", "option"]), frozenset(["select"])),
    "tr": (frozenset(["tr", "td", "th"]), frozenset(["table", "thead", "tbody", "tfoot"])),
    "td": (frozenset(["td", "th"]), frozenset(["tr", "table"])),
    "th": (frozenset(["td", "th"]), frozenset(["tr", "table"])),
    "thead": (frozenset(["thead", "tbody", "tfoot", "tr", "td", "th"]), frozenset(["table"])),
    "tbody": (frozenset(["thead", "tbody", "tfoot", "tr", "td", "th"]), frozenset(["table"])),
    "tfoot": (frozenset(["thead", "tbody", "tfoot", "tr", "td", "th"]), frozenset(["table"])),
    "a": (frozenset(["a"]), _SCOPE_BOUNDARY),
}


@dataclass
class DomNode:
    kind: str
    name: str = ""
    text: bytes = b""
    attrs: dict = field(default_factory=dict)
    parent: int = 0
    first_child: int = 0
    next_sibling: int = 0


class DomTree:
    """Read-only node table; ``nodes[0]`` is a placeholder so IDs index directly."""

    __slots__ = ("_nodes",)

    def __init__(self, nodes: list):
        self._nodes = nodes

    def __len__(self) -> int:
        return len(self._nodes) - 1

    def valid(self, n) -> bool:
        return isinstance(n, int) and 0 < n < len(self._nodes)

    def node(self, n: int) -> Optional[DomNode]:
        return self._nodes[n] if self.valid(n) else None

    def parent(self, n: int) -> int:
        return self._nodes[n].parent if self.valid(n) else 0

    def sister(self, n: int) -> int:
        return self._nodes[n].next_sibling if self.valid(n) else 0

    def children(self, n: int) -> int:
        return self._nodes[n].first_child if self.valid(n) else 0

    def nav(self, n: int, axis: str) -> int:
        if axis == "parent":
            return self.parent(n)
        if axis == "sister":
            return self.sister(n)
        if axis == "children":
            return self.children(n)
        raise ValueError(f"unknown axis {axis!r}")

    def kind(self, n: int) -> str:
        return self._nodes[n].kind if self.valid(n) else ""

    def name(self, n: int) -> str:
        return self._nodes[n].name if self.valid(n) else ""

    def text(self, n: int) -> bytes:
        return self._nodes[n].text if self.valid(n) else b""

    def attr(self, n: int, a: str) -> bytes:
        if not self.valid(n):
            return b""
        return self._nodes[n].attrs.get(a.lower(), b"")

    def has_attr(self, n: int, a: str) -> bool:
        return self.valid(n) and a.lower() in self._nodes[n].attrs

    def child_ids(self, n: int) -> Iterator[int]:
        c = self.children(n)
        while c:
            yield c
            c = self._nodes[c].next_sibling

    def ancestors(self, n: int) -> Iterator[int]:
        p = self.parent(n)
        while p:
            yield p
            p = self._nodes[p].parent

    def dump(self) -> str:
        """ID-annotated indented listing, one node per line."""
        lines = []
        depth = {1: 0}
        for n in range(1, len(self._nodes)):
            node = self._nodes[n]
            d = depth[node.parent] + 1 if node.parent else 0
            depth[n] = d
            pad = "  " * d
            if node.kind == ELEMENT:
                attrs = "".join(
                    f' {k}="{v.decode("utf-8", "replace")}"' for k, v in node.attrs.items()
                )
                desc = f"<{node.name}{attrs}>"
            elif node.kind in (TEXT, COMMENT):
                desc = f"{node.kind} {node.text.decode('utf-8', 'replace')!r}"
            else:
                desc = node.kind
            lines.append(f"{n:>5} {pad}{desc}")
        return "\n".join(lines) + "\n"


class _Build:
    __slots__ = ("kind", "name", "text", "attrs", "children")

    def __init__(self, kind, name="", text=b"", attrs=None):
        self.kind = kind
        self.name = name
        self.text = text
        self.attrs = attrs if attrs is not None else {}
        self.children = []


def _enc(s: str) -> bytes:
    return s.encode("utf-8", "surrogateescape")


class _TreeBuilder(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.root = _Build(ROOT)
        self.stack = [self.root]
        self.pending_text: list[str] = []

    # -- helpers
    def _flush_text(self):
        if self.pending_text:
            text = "".join(self.pending_text)
            self.pending_text = []
            if text:
                self.stack[-1].children.append(_Build(TEXT, text=_enc(text)))

    def _append(self, node):
        self._flush_text()
        self.stack[-1].children.append(node)

    def _open_names(self):
        return [n.name for n in self.stack[1:]]

    def _close_through(self, idx: int):
        del self.stack[idx:]

    def _find_in_scope(self, targets, boundary) -> int:
        for i in range(len(self.stack) - 1, 0, -1):
            name = self.stack[i].name
            if name in targets:
                return i
            if name in boundary:
                return -1
        return -1

    # -- HTMLParser callbacks
    def handle_starttag(self, tag, attrs):
        self._flush_text()
        if tag in _CLOSES_P:
            i = self._find_in_scope({"p"}, _SCOPE_BOUNDARY)
            if i > 0:
                self._close_through(i)
        if tag in _HEADINGS and self.stack[-1].name in _HEADINGS:
            self.stack.pop()
        implied = _IMPLIED_END.get(tag)
        if implied:
            i = self._find_in_scope(implied[0], implied[1])
            if i > 0:
                self._close_through(i)
        amap = {}
        for k, v in attrs:
            if k not in amap:
                amap[k] = _enc(v) if v is not None else b""
        node = _Build(ELEMENT, name=tag, attrs=amap)
        self._append(node)
        if tag not in VOID_ELEMENTS:
            self.stack.append(node)

    def handle_startendtag(self, tag, attrs):
        # XML-style <x/>: no children, even for non-void elements
        self.handle_starttag(tag, attrs)
        if tag not in VOID_ELEMENTS and self.stack[-1].name == tag:
            self.stack.pop()

    def handle_endtag(self, tag):
        self._flush_text()
        for i in range(len(self.stack) - 1, 0, -1):
            if self.stack[i].name == tag:
                self._close_through(i)
                return
        # stray end tag: ignored

    def handle_data(self, data):
        self.pending_text.append(data)

    def handle_comment(self, data):
        self._append(_Build(COMMENT, text=_enc(data)))

    def handle_decl(self, decl):
        self._append(_Build(DECLARATION))

    def handle_pi(self, data):
        self._append(_Build(PROCINS))

    def unknown_decl(self, data):
        if data.startswith("CDATA["):
            self.pending_text.append(data[6:])
        else:
            self.pending_text.append(f"<![{data}]>")

    def finish(self) -> _Build:
        self.close()
        if self.rawdata:
            self.pending_text.append(self.rawdata)
            self.rawdata = ""
        self._flush_text()
        return self.root


def parse_html(b: bytes) -> DomTree:
    if isinstance(b, str):
        b = b.encode("utf-8")
    builder = _TreeBuilder()
    builder.feed(bytes(b).decode("utf-8", "surrogateescape"))
    root = builder.finish()

    nodes: list = [None]
    # pre-order numbering with an explicit stack; link fields filled as we go
    stack = [(root, 0)]
    last_child: dict[int, int] = {}
    while stack:
        b_node, parent = stack.pop()
        nid = len(nodes)
        nodes.append(
            DomNode(
                kind=b_node.kind,
                name=b_node.name,
                text=b_node.text,
                attrs=b_node.attrs,
                parent=parent,
            )
        )
        if parent:
            prev = last_child.get(parent)
            if prev:
                nodes[prev].next_sibling = nid
            else:
                nodes[parent].first_child = nid
            last_child[parent] = nid
        for child in reversed(b_node.children):
            stack.append((child, nid))
    return DomTree(nodes)
