import hashlib
import multiprocessing
import os

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from pcsi.records import make_inference, make_perception, make_rule
from pcsi.sexpr import Digest, hash_canonical, iter_canonical
from pcsi.store import BlobCorrupt, BlobNotFound, Store

from conftest import ARTICLE_URL, BBC_PATTERN

SRC = Digest(b"S" * 32)


def a_rule(ts="1"):
    return make_rule(SRC, ts, BBC_PATTERN, object_type="article", script_hash=hash_canonical(b"s" + ts.encode()))


def an_inference(ts="1", url=ARTICLE_URL):
    return make_inference(SRC, ts, url, script_hash=hash_canonical(b"s"), error="fetch: timeout")


def test_blob_round_trip_and_digest(tmp_path):
    store = Store(tmp_path)
    d = store.put_blob(b"abc")
    assert store.get_blob(d) == b"abc"
    # frozen from `printf abc | sha256sum`
    assert d.hex() == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    assert d.hex() == hashlib.sha256(b"abc").hexdigest()


def test_put_is_idempotent(tmp_path):
    store = Store(tmp_path)
    assert store.put_blob(b"x") == store.put_blob(b"x")
    assert len(list(store.iter_blobs())) == 1


def test_missing_and_corrupt_blobs_are_distinct(tmp_path):
    store = Store(tmp_path)
    with pytest.raises(BlobNotFound):
        store.get_blob(Digest(b"\x00" * 32))
    d = store.put_blob(b"original")
    store.blob_path(d).write_bytes(b"tampered")
    with pytest.raises(BlobCorrupt):
        store.get_blob(d)
    report = store.audit()
    assert report.mismatches == [d.hex()] and not report.clean


def test_scripts_are_stored_under_their_script_hash(tmp_path, bbc_script):
    store = Store(tmp_path)
    d = store.put_script(bbc_script)
    assert d == hash_canonical(bbc_script)
    assert store.get_script(d) == bbc_script


def test_append_and_list(tmp_path):
    store = Store(tmp_path)
    assert store.list_records() == []
    rule = store.append_record(a_rule())
    inf = store.append_record(an_inference())
    other = store.append_record(an_inference("2", "https://example.com/"))
    assert store.list_records(type="rule") == [rule]
    assert store.list_records(url=ARTICLE_URL) == [inf]
    assert store.list_records(type="inference") == [inf, other]
    assert store.list_records(object_type="article") == [rule]
    assert store.list_records(source=SRC.display()) == [rule, inf, other]
    assert store.list_records(source="not a fingerprint") == []
    assert store.list_records(url="\x00weird") == []


def test_append_accepts_sexpr_and_validates(tmp_path):
    store = Store(tmp_path)
    store.append_record(a_rule().to_sexpr())
    with pytest.raises(ValueError):
        store.append_record([b"rule"])
    assert len(store.records()) == 1


def test_torn_tail_is_recovered(tmp_path):
    store = Store(tmp_path)
    store.append_record(a_rule("1"))
    store.append_record(a_rule("2"))
    full = store.log_path.read_bytes()
    # simulate a crash half way through a third append
    with open(store.log_path, "ab") as f:
        f.write(a_rule("3").canonical()[:25])
    assert len(Store(tmp_path).records()) == 2
    assert store.log_path.read_bytes() == full
    store.append_record(a_rule("4"))
    assert [r.timestamp for r in store.records()] == ["1", "2", "4"]


def test_export_import_round_trip(tmp_path):
    src = Store(tmp_path / "a")
    for i in range(5):
        src.append_record(a_rule(str(i)) if i % 2 else an_inference(str(i)))
    obj = [b"article", [b"headline", b"h"]]
    src.append_record(make_inference(SRC, "9", ARTICLE_URL, script_hash=hash_canonical(b"s"),
                                     object_type="article", obj=obj))
    dst = Store(tmp_path / "b")
    assert dst.import_records(src.export_records()) == 6
    exported = [r for r in dst.records()]
    assert exported[:5] == src.records()[:5]
    assert exported[5].object is None and exported[5].object_hash == hash_canonical(obj)
    full = Store(tmp_path / "c")
    full.import_records(src.export_records(include_objects=True))
    assert full.records() == src.records()


def _append_many(root, start, count):
    store = Store(root)
    for i in range(start, start + count):
        store.append_record(a_rule(str(i)))


def test_concurrent_appends_from_processes(tmp_path):
    ctx = multiprocessing.get_context("fork")
    procs = [ctx.Process(target=_append_many, args=(tmp_path, k * 100, 25)) for k in range(4)]
    for p in procs:
        p.start()
    for p in procs:
        p.join(60)
    assert all(p.exitcode == 0 for p in procs)
    store = Store(tmp_path)
    assert len(store.records()) == 100
    assert store.audit().records == 100


operations = st.lists(
    st.one_of(
        st.tuples(st.just("put"), st.binary(max_size=64)),
        st.tuples(st.just("append"), st.integers(0, 10**6)),
    ),
    max_size=30,
)


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(operations)
def test_random_interleavings_audit_clean(tmp_path_factory, ops):
    store = Store(tmp_path_factory.mktemp("store"))
    appended = 0
    blobs = set()
    for op, arg in ops:
        if op == "put":
            blobs.add(store.put_blob(arg))
        else:
            store.append_record(a_rule(str(arg)) if arg % 2 else an_inference(str(arg)))
            appended += 1
    report = store.audit()
    assert report.clean and report.blobs_checked == len(blobs)
    assert report.records == appended
    assert len(list(iter_canonical(store.log_path.read_bytes() if appended else b""))) == appended
    assert not [p for p in os.listdir(store.blob_dir) if p.startswith(".tmp-")]
