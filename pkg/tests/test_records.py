import itertools
import random
import re

import pytest
from hypothesis import given, settings, strategies as st

from pcsi.records import (
    InferenceRecord,
    PerceptionRecord,
    RecordError,
    RuleRecord,
    load_trust,
    make_inference,
    make_perception,
    make_rule,
    parse_record,
    parse_records_display,
    pattern_matches,
    select_rules,
    shareable,
)
from pcsi.sexpr import Digest, encode_canonical, hash_canonical, parse_canonical, parse_display

from conftest import ARTICLE_URL, BBC_PATTERN, INFER_SOURCE, PERCEIVE_SOURCE, RULE_SOURCE
from oracles import python_ere

SCRIPT_HASH = "|CY7Iwrrw5i7MyjV7Zqdwf2Tj0Hb3iCsJF4Sv6jcrUyw=|"

RULE_LISTING = """(rule
  (source |WRlcbFQcgwfx2i0edolvIoDjHn8hetX0xkw1QrBBEaQ=|)
  (timestamp "1735608269")
  (pattern 57:https?://(www\\.)?bbc\\.com/news/articles/[0-9a-z][0-9a-z]*)
  (script-hash |CY7Iwrrw5i7MyjV7Zqdwf2Tj0Hb3iCsJF4Sv6jcrUyw=|)
  (object-type article))"""


def bbc_rule(**kw):
    args = dict(source=RULE_SOURCE, timestamp="1735608269", pattern=BBC_PATTERN,
                object_type="article", script_hash=SCRIPT_HASH)
    args.update(kw)
    return make_rule(args.pop("source"), args.pop("timestamp"), args.pop("pattern"), **args)


def test_rule_display_matches_listing():
    assert bbc_rule().display() == RULE_LISTING


def test_rule_listing_round_trips_to_identical_bytes():
    value = parse_display(RULE_LISTING)
    record = parse_record(value)
    assert isinstance(record, RuleRecord)
    assert record.canonical() == encode_canonical(value)
    assert parse_record(parse_canonical(record.canonical())) == record


def test_inference_error_branch():
    rec = make_inference(INFER_SOURCE, "1735610039", ARTICLE_URL, script_hash=SCRIPT_HASH,
                         error="runtime: error: missing headline")
    heads = [f[0] for f in rec.to_sexpr()[1:]]
    assert b"error" in heads and b"object-type" not in heads and b"object-hash" not in heads
    with pytest.raises(RecordError):
        make_inference(INFER_SOURCE, "1", ARTICLE_URL, script_hash=SCRIPT_HASH,
                       error="x", object_type="article")


def test_inference_success_field_order():
    oh = hash_canonical([b"article"])
    rec = make_inference(INFER_SOURCE, "1735610039", ARTICLE_URL, script_hash=SCRIPT_HASH,
                         object_type="article", object_hash=oh)
    assert [f[0] for f in rec.to_sexpr()[1:]] == [
        b"source", b"timestamp", b"url", b"script-hash", b"object-type", b"object-hash"]


def test_inference_needs_a_result_or_an_error():
    with pytest.raises(RecordError):
        make_inference(INFER_SOURCE, "1", ARTICLE_URL, script_hash=SCRIPT_HASH)
    with pytest.raises(RecordError):
        make_inference(INFER_SOURCE, "1", ARTICLE_URL, script_hash=SCRIPT_HASH, object_type="article")


def test_perception_shape_and_valid_flag():
    oh = Digest(bytes(range(32)))
    rec = make_perception(PERCEIVE_SOURCE, "1735610400", ARTICLE_URL, "article", oh, "1")
    assert [f[0] for f in rec.to_sexpr()[1:]] == [
        b"source", b"timestamp", b"url", b"object-type", b"object-hash", b"valid"]
    assert make_perception(PERCEIVE_SOURCE, "1", ARTICLE_URL, "article", oh, "0").valid == "0"
    with pytest.raises(RecordError, match='valid must be "0" or "1"'):
        make_perception(PERCEIVE_SOURCE, "1", ARTICLE_URL, "article", oh, "2")


@pytest.mark.parametrize(
    "kw, field",
    [
        (dict(timestamp="-1"), "timestamp"),
        (dict(timestamp="12a"), "timestamp"),
        (dict(timestamp="007"), "timestamp"),
        (dict(pattern=b"(unclosed"), "pattern"),
        (dict(object_type="has space"), "object-type"),
        (dict(source=b"short"), "source"),
        (dict(script_hash=None), "script-hash"),
    ],
)
def test_rule_field_validation(kw, field):
    with pytest.raises(RecordError) as info:
        bbc_rule(**kw)
    assert info.value.field == field


def test_script_and_hash_must_agree():
    script = b"BEGIN { }"
    ok = bbc_rule(script=script, script_hash=hash_canonical(script))
    assert ok.resolved_script_hash == hash_canonical(script)
    with pytest.raises(RecordError):
        bbc_rule(script=script)  # default hash is the listing's, not this script's
    assert bbc_rule(script=script, script_hash=None).resolved_script_hash == hash_canonical(script)


def test_parse_record_errors():
    with pytest.raises(RecordError, match="unknown record type"):
        parse_record([b"advice", [b"source", b"x"]])
    dup = parse_display(RULE_LISTING)
    dup.insert(2, [b"timestamp", b"1"])
    with pytest.raises(RecordError, match="duplicate field"):
        parse_record(dup)
    missing = [f for f in parse_display(RULE_LISTING) if not (isinstance(f, list) and f[0] == b"pattern")]
    with pytest.raises(RecordError, match="missing required field: pattern"):
        parse_record(missing)
    narrow = parse_display(RULE_LISTING)
    narrow[4] = [b"script-hash", b"\x00" * 31]
    with pytest.raises(RecordError, match="digest width"):
        parse_record(narrow)
    with pytest.raises(RecordError):
        parse_record(b"rule")


def test_unknown_fields_are_preserved():
    value = parse_display(RULE_LISTING)
    value.append([b"comment", b"kept"])
    record = parse_record(value)
    assert record.canonical() == encode_canonical(value)


def test_shareable_drops_object_field():
    obj = [b"article", [b"headline", b"x"]]
    rec = make_inference(INFER_SOURCE, "1", ARTICLE_URL, script_hash=SCRIPT_HASH,
                         object_type="article", obj=obj)
    shared = shareable(rec)
    assert shared.object is None and shared.object_hash == hash_canonical(obj)
    assert b"(6:object" not in shared.canonical()


def test_parse_records_display_many():
    recs = parse_records_display(RULE_LISTING + "\n" + RULE_LISTING)
    assert len(recs) == 2 and recs[0] == recs[1]


# -- pattern matching ------------------------------------------------------------

@pytest.mark.parametrize(
    "url, ok",
    [
        ("https://www.bbc.com/news/articles/cd0elzk24dno", True),
        ("http://www.bbc.com/news/articles/cd0elzk24dno", True),
        ("https://bbc.com/news/articles/cd0elzk24dno", True),
        ("https://www.bbc.com/sport", False),
        ("https://www.bbc.co.uk/news/articles/cd0elzk24dno", False),
        ("https://www.bbc.com/news/articles/CD0ELZK24DNO", False),
        ("https://www.bbc.com/news/articles/cd0elzk24dno?x=1", False),
        ("https://www.bbc.com/news/articles/", False),
    ],
)
def test_bbc_pattern(url, ok):
    assert pattern_matches(BBC_PATTERN, url) is ok


def test_full_anchoring():
    assert not pattern_matches("a+", "baaa")
    assert pattern_matches("a+", "aaa")
    assert not pattern_matches("b", "abc")


@settings(max_examples=300, deadline=None)
@given(
    st.sampled_from(["a+", "(ab|b)*c?", "[a-c]+:[0-9]*", "h(t)+p", ".*", "[[:digit:]]+", "a|b|"]),
    st.text(alphabet="abcht:0p9", max_size=10),
)
def test_pattern_matches_agrees_with_anchored_python_re(pattern, url):
    expected = re.fullmatch("^(" + python_ere(pattern).pattern + ")$", url, re.DOTALL) is not None
    assert pattern_matches(pattern, url) is expected


# -- selection ------------------------------------------------------------------

SRC_A = Digest(b"A" * 32)
SRC_B = Digest(b"B" * 32)
SRC_C = Digest(b"C" * 32)


def rule_from(src, ts, pattern=BBC_PATTERN, otype="article"):
    return make_rule(src, ts, pattern, object_type=otype, script_hash=hash_canonical(f"{src}{ts}".encode()))


def test_select_rules_examples():
    r = rule_from(SRC_A, "100")
    assert select_rules([r], ARTICLE_URL) == [r]
    old, new = rule_from(SRC_A, "100"), rule_from(SRC_A, "200")
    assert select_rules([old, new], ARTICLE_URL) == [new, old]
    a, b = rule_from(SRC_A, "900"), rule_from(SRC_B, "100")
    assert select_rules([a, b], ARTICLE_URL, trust=[SRC_B, SRC_A]) == [b, a]
    unlisted = rule_from(SRC_C, "999")
    assert select_rules([unlisted, a], ARTICLE_URL, trust=[SRC_A]) == [a, unlisted]
    other = rule_from(SRC_A, "500", pattern=b"https://example\\.com/.*")
    assert select_rules([other], ARTICLE_URL) == []


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.sampled_from([SRC_A, SRC_B, SRC_C]), st.integers(0, 5),
                          st.sampled_from([BBC_PATTERN, b".*", b"nope"])), max_size=8),
       st.randoms())
def test_select_rules_subset_and_permutation_stable(specs, rnd):
    rules = [rule_from(s, str(t), p) for s, t, p in specs]
    base = select_rules(rules, ARTICLE_URL, trust=[SRC_B])
    shuffled = list(rules)
    rnd.shuffle(shuffled)
    assert select_rules(shuffled, ARTICLE_URL, trust=[SRC_B]) == base
    assert all(r in rules and r.matches(ARTICLE_URL) for r in base)
    assert len(base) == sum(1 for r in rules if r.matches(ARTICLE_URL))


def test_load_trust(tmp_path):
    path = tmp_path / "trust"
    path.write_text(f"# most trusted first\n{SRC_B.display()}\n\n{SRC_A.hex()}  # hex works too\n")
    assert load_trust(path) == [SRC_B, SRC_A]
    path.write_text("garbage\n")
    with pytest.raises(RecordError):
        load_trust(path)


# -- randomized round trips -----------------------------------------------------------

digests = st.binary(min_size=32, max_size=32).map(Digest)
timestamps = st.integers(0, 10**12).map(str)
tokens = st.from_regex(r"[a-z][a-z0-9\-]{0,8}", fullmatch=True)
urls = st.text(min_size=1, max_size=30).map(lambda s: s.encode("utf-8"))


@settings(max_examples=150, deadline=None)
@given(digests, timestamps, st.sampled_from([b"a+", BBC_PATTERN, b".*"]), tokens,
       st.one_of(st.none(), st.binary(max_size=40)), st.booleans())
def test_rule_round_trip(src, ts, pattern, otype, script, with_hash):
    if script is None:
        script_hash = hash_canonical(b"x")
    else:
        script_hash = hash_canonical(script) if with_hash else None
    rec = make_rule(src, ts, pattern, script, otype, script_hash=script_hash)
    assert parse_record(parse_canonical(rec.canonical())) == rec
    assert parse_record(parse_display(rec.display())) == rec


@settings(max_examples=150, deadline=None)
@given(digests, timestamps, urls, digests, tokens, digests, st.one_of(st.none(), st.text(max_size=30)))
def test_inference_round_trip(src, ts, url, sh, otype, oh, error):
    if error is None:
        rec = make_inference(src, ts, url, script_hash=sh, object_type=otype, object_hash=oh)
    else:
        rec = make_inference(src, ts, url, script_hash=sh, error=error)
    assert parse_record(parse_canonical(rec.canonical())) == rec
    assert parse_record(parse_display(rec.display())) == rec


@settings(max_examples=150, deadline=None)
@given(digests, timestamps, urls, tokens, digests, st.sampled_from(["0", "1"]))
def test_perception_round_trip(src, ts, url, otype, oh, valid):
    rec = make_perception(src, ts, url, otype, oh, valid)
    assert isinstance(parse_record(parse_canonical(rec.canonical())), PerceptionRecord)
    assert parse_record(parse_display(rec.display())) == rec
