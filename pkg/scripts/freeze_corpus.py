"""Freeze reference Awk output for the conformance corpus.

Runs each ``tests/corpus/*.awk`` under a reference Awk (``mawk`` by default)
and writes ``<name>.out`` (stdout bytes) and ``<name>.status`` beside it.
Run again only when the corpus changes; the tests compare against these files.
"""

import argparse
import shutil
import subprocess
import sys
from pathlib import Path

CORPUS = Path(__file__).resolve().parent.parent / "tests" / "corpus"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--awk", default="mawk", help="reference awk binary")
    ap.add_argument("--check", action="store_true", help="compare instead of writing")
    args = ap.parse_args()
    awk = shutil.which(args.awk)
    if awk is None:
        print(f"{args.awk}: not found", file=sys.stderr)
        return 2
    stale = 0
    for script in sorted(CORPUS.glob("*.awk")):
        proc = subprocess.run([awk, "-f", str(script)], stdin=subprocess.DEVNULL,
                              capture_output=True, timeout=30)
        out_path, status_path = script.with_suffix(".out"), script.with_suffix(".status")
        if args.check:
            same = out_path.read_bytes() == proc.stdout and int(status_path.read_text()) == proc.returncode
            stale += not same
            print(f"{'ok   ' if same else 'STALE'} {script.name}")
        else:
            out_path.write_bytes(proc.stdout)
            status_path.write_text(f"{proc.returncode}\n")
            print(f"froze {script.name} (exit {proc.returncode})")
    return 1 if stale else 0


if __name__ == "__main__":
    sys.exit(main())
