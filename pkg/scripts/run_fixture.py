"""End-to-end run over the bundled article fixture.

Builds a throwaway store, adds the reference rule, runs inference on the
fixture page and on the copy without a headline, then prints both records,
the object in display form and the timings.
"""

import argparse
import tempfile
import time
from pathlib import Path

from pcsi.engine import FetchConfig, infer
from pcsi.records import parse_records_display
from pcsi.sexpr import Digest, render_display
from pcsi.store import Store

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
URL = "https://www.bbc.com/news/articles/cd0elzk24dno"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--store", help="keep the store here instead of a temporary directory")
    args = ap.parse_args()
    with tempfile.TemporaryDirectory() as tmp:
        store = Store(args.store or tmp)
        store.put_script((FIXTURES / "bbc.hex").read_bytes())
        for rule in parse_records_display((FIXTURES / "bbc.rule").read_bytes()):
            store.append_record(rule)
        source = Digest(b"\x01" * 32)
        for page in ("bbc.html", "bbc-no-h1.html"):
            start = time.perf_counter()
            out = infer(URL, store, cfg=FetchConfig(offline_input=FIXTURES / page), source_id=source)
            elapsed = time.perf_counter() - start
            print(f";; {page}: {'ok' if out.ok else out.error} in {elapsed * 1000:.1f} ms")
            print(out.record.display())
            if out.object is not None:
                print(render_display(out.object))
        audit = store.audit()
        print(f";; audit: {audit.blobs_checked} blobs, {len(audit.mismatches)} mismatches, {audit.records} records")


if __name__ == "__main__":
    main()
