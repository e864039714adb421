import pytest
from hypothesis import given, settings

from pcsi.sexpr import (
    Digest,
    SExprError,
    atom,
    encode_canonical,
    hash_canonical,
    iter_canonical,
    parse_canonical,
    parse_display,
    parse_display_many,
    render_display,
)

from conftest import ARTICLE_PREFIX, sexpr_trees


def test_atom_and_empty_list():
    assert encode_canonical(b"abc") == b"3:abc"
    assert encode_canonical([]) == b"()"
    assert encode_canonical(b"") == b"0:"
    assert encode_canonical([b"a", [b"bc", []]]) == b"(1:a(2:bc()))"


def test_article_prefix_from_display_form():
    value = parse_display(
        '(article (headline "BBC complains to Apple over misleading shooting headline")'
        ' (date "1734112342") (author "Graham Fraser") (body))'
    )
    assert encode_canonical(value).startswith(ARTICLE_PREFIX)


def test_parse_canonical_examples():
    assert parse_canonical(b"3:abc") == b"abc"
    assert parse_canonical(b"(7:article)") == [b"article"]


@pytest.mark.parametrize(
    "data, offset",
    [
        (b"3:ab", 2),
        (b"3:abcd", 5),
        (b"(1:a", 0),
        (b")", 0),
        (b"3abc", 1),
        (b"03:abc", 0),
        (b"", 0),
    ],
)
def test_parse_canonical_errors_carry_offset(data, offset):
    with pytest.raises(SExprError) as info:
        parse_canonical(data)
    assert info.value.offset == offset


def test_oversized_length_rejected():
    with pytest.raises(SExprError):
        parse_canonical(b"2147483648:x")


def test_iter_canonical_greedy():
    stream = b"1:a(1:b)()"
    assert [v for v, _s, _e in iter_canonical(stream)] == [b"a", [b"b"], []]


def test_render_display_examples():
    assert render_display(b"article") == "article"
    assert render_display(b"Graham Fraser") == '"Graham Fraser"'
    d = Digest.from_display("|CY7Iwrrw5i7MyjV7Zqdwf2Tj0Hb3iCsJF4Sv6jcrUyw=|")
    assert render_display(d) == "|CY7Iwrrw5i7MyjV7Zqdwf2Tj0Hb3iCsJF4Sv6jcrUyw=|"
    assert render_display(bytes(d)) == "|CY7Iwrrw5i7MyjV7Zqdwf2Tj0Hb3iCsJF4Sv6jcrUyw=|"
    assert render_display(b"1734112342") == '"1734112342"'
    assert render_display(b'say "hi"\n') == '"say \\"hi\\"\\n"'
    assert render_display(rb"a\.b") == r"4:a\.b"


def test_parse_display_examples():
    assert parse_display("(4:date10:1734112342)") == [b"date", b"1734112342"]
    assert parse_display('(date "1734112342")') == [b"date", b"1734112342"]
    assert parse_display("|AAAA|") == b"\x00\x00\x00"
    assert parse_display('  ( a\n\t"b c" ; comment\n ) ') == [b"a", b"b c"]
    assert parse_display_many("a (b) 1:c") == [b"a", [b"b"], b"c"]


@pytest.mark.parametrize("text", ["|AA=|x", "|A!AA|", '"open', "5:abc", "(a", "a)", ""])
def test_parse_display_errors(text):
    with pytest.raises(SExprError):
        parse_display(text)


def test_digest_width_enforced():
    with pytest.raises(ValueError):
        Digest(b"\x00" * 31)
    with pytest.raises(ValueError):
        Digest.from_display("|AAAA|")


def test_hash_of_abc_atom_is_sha256_of_canonical_bytes():
    # frozen from `printf '3:abc' | sha256sum`
    assert hash_canonical(b"abc").hex() == "aab5f9ae99b2e38fb462025c8f72f570c9c811705d2a4277dc855d7fa293fe97"


@settings(max_examples=300, deadline=None)
@given(sexpr_trees())
def test_canonical_round_trip(v):
    assert parse_canonical(encode_canonical(v)) == v


@settings(max_examples=300, deadline=None)
@given(sexpr_trees())
def test_display_round_trip(v):
    assert parse_display(render_display(v)) == v
    assert parse_display(render_display(v, width=10_000)) == v


@settings(max_examples=200, deadline=None)
@given(sexpr_trees())
def test_hash_stable_across_reencoding(v):
    assert hash_canonical(parse_canonical(encode_canonical(v))) == hash_canonical(v)
    assert hash_canonical(parse_display(render_display(v))) == hash_canonical(v)


def _structure_bytes(v, out):
    if isinstance(v, bytes):
        out += b"%d:" % len(v)
    else:
        out += b"("
        for c in v:
            _structure_bytes(c, out)
        out += b")"
    return out


@settings(max_examples=200, deadline=None)
@given(sexpr_trees())
def test_only_structural_bytes_outside_payloads(v):
    enc = encode_canonical(v)
    # strip payloads by walking: what remains must be parens, digits and colons
    skeleton = bytes(_structure_bytes(v, bytearray()))
    assert set(skeleton) <= set(b"()0123456789:")
    assert len(enc) == len(skeleton) + _payload_len(v)


def _payload_len(v):
    return len(v) if isinstance(v, bytes) else sum(_payload_len(c) for c in v)


def test_deep_nesting_does_not_recurse():
    v = b"x"
    for _ in range(50_000):
        v = [v]
    enc = encode_canonical(v)
    assert encode_canonical(parse_canonical(enc)) == enc


def test_atom_helper():
    assert atom("é") == "é".encode("utf-8")
    assert atom(b"x") == b"x"
