from hypothesis import given, settings, strategies as st

from pcsi.htmldom import COMMENT, DECLARATION, ELEMENT, ROOT, TEXT, parse_html


def names(tree):
    return [(n, tree.kind(n), tree.name(n)) for n in range(1, len(tree) + 1)]


def test_simple_document_has_no_synthetic_nodes():
    t = parse_html(b"<html><body><p>hi</p></body></html>")
    assert len(t) == 5
    assert [tree_name for _n, _k, tree_name in names(t)] == ["", "html", "body", "p", ""]
    assert t.kind(1) == ROOT and t.kind(5) == TEXT and t.text(5) == b"hi"


def test_preorder_ids_and_navigation():
    t = parse_html(b"<div><a>x</a><b>y</b></div><i></i>")
    assert t.children(1) == 2
    assert t.name(2) == "div" and t.children(2) == 3
    assert t.name(3) == "a" and t.sister(3) == 5 and t.parent(3) == 2
    assert t.name(5) == "b" and t.sister(5) == 0
    assert t.name(7) == "i" and t.sister(2) == 7
    assert list(t.child_ids(2)) == [3, 5]
    assert list(t.ancestors(4)) == [3, 2, 1]


def test_zero_and_out_of_range_are_no_node():
    t = parse_html(b"<p>x</p>")
    for bad in (0, -1, 999):
        assert t.parent(bad) == 0 and t.sister(bad) == 0 and t.children(bad) == 0
        assert t.kind(bad) == "" and t.name(bad) == "" and t.text(bad) == b""
    assert t.parent(1) == 0


def test_paragraphs_close_implicitly():
    t = parse_html(b"<p>a<p>b")
    assert [n for n, k, name in names(t) if name == "p"] == [2, 4]
    assert t.parent(4) == 1


def test_list_items_close_implicitly():
    t = parse_html(b"<ul><li>one<li>two</ul><p>after")
    lis = [n for n, _k, name in names(t) if name == "li"]
    assert [t.parent(n) for n in lis] == [2, 2]
    assert t.parent([n for n, _k, name in names(t) if name == "p"][0]) == 1


def test_void_elements_take_no_children():
    t = parse_html(b'<div><img src="a.png">text<br>more</div>')
    img = [n for n, _k, name in names(t) if name == "img"][0]
    assert t.children(img) == 0
    assert t.attr(img, "src") == b"a.png"
    assert t.kind(t.sister(img)) == TEXT


def test_character_references_and_attributes():
    t = parse_html(b'<a HREF="x?a=1&amp;b=2" class="c1  c2" class="ignored">caf&eacute; &lt;&gt;</a>')
    assert t.name(2) == "a"
    assert t.attr(2, "href") == b"x?a=1&b=2"
    assert t.attr(2, "class") == b"c1  c2"
    assert t.text(3) == "café <>".encode("utf-8")
    assert not t.has_attr(2, "id") and t.attr(2, "id") == b""


def test_raw_text_comments_and_doctype():
    t = parse_html(b"<!DOCTYPE html><!-- note --><script>if (a < b) x = '</p>';</script>")
    kinds = [k for _n, k, _name in names(t)]
    assert kinds[:3] == [ROOT, DECLARATION, COMMENT]
    script = [n for n, _k, name in names(t) if name == "script"][0]
    assert t.text(t.children(script)) == b"if (a < b) x = '</p>';"


def test_stray_end_tags_ignored():
    t = parse_html(b"</div><span>a</b></span>")
    assert [name for _n, _k, name in names(t) if name] == ["span"]


def test_dump_lists_every_node_with_id():
    t = parse_html(b'<div id="x"><p>hi</p></div>')
    lines = t.dump().splitlines()
    assert len(lines) == len(t)
    assert lines[1].split() == ["2", '<div', 'id="x">']
    assert "TEXT 'hi'" in lines[3]


def test_empty_input_is_just_root():
    t = parse_html(b"")
    assert len(t) == 1 and t.kind(1) == ROOT and t.children(1) == 0


@settings(max_examples=200, deadline=None)
@given(st.binary(max_size=300))
def test_tree_links_are_consistent_for_any_input(data):
    t = parse_html(data)
    seen = []
    stack = [1]
    while stack:
        n = stack.pop()
        seen.append(n)
        kids = list(t.child_ids(n))
        for k in kids:
            assert t.parent(k) == n
        stack.extend(reversed(kids))
    # pre-order traversal visits every node exactly once, in ID order
    assert seen == list(range(1, len(t) + 1))
    for n in range(1, len(t) + 1):
        if t.kind(n) != ELEMENT:
            assert t.children(n) == 0 or t.kind(n) == ROOT
