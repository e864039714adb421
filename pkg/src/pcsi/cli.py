"""Command-line entry point: ``pcsi <command> ...``.

Exit status is 0 on success, 1 when the pipeline or a lookup fails and 2 on
usage errors.  ``hex`` exits with the script's own status.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Optional, Sequence

from .engine import FetchConfig, PerceptionError, infer, perceive
from .hexlang import HexSyntaxError, compile_hex, execute
from .htmldom import parse_html
from .records import RecordError, RuleRecord, load_trust, parse_records_display, select_rules
from .sexpr import Digest, SExprError, parse_canonical, render_display
from .store import BlobCorrupt, BlobNotFound, Store

STORE_ENV = "PCSI_STORE"
IDENTITY_FILE = "identity"
TRUST_FILE = "trust"


class CliFailure(Exception):
    """Reported on stderr; exit status 1."""


@dataclass
class CliConfig:
    store_root: Path
    trust_file: Optional[Path] = None
    canonical: bool = False
    fetch: FetchConfig = FetchConfig()

    @classmethod
    def from_args(cls, args) -> "CliConfig":
        root = args.store or os.environ.get(STORE_ENV) or str(Path.home() / ".pcsi")
        offline = getattr(args, "offline", None)
        try:
            fetch_cfg = FetchConfig(timeout=args.timeout, max_body_bytes=args.max_bytes,
                                    offline_input=Path(offline) if offline else None)
        except ValueError as exc:
            raise CliFailure(str(exc)) from None
        return cls(Path(root), Path(args.trust) if args.trust else None, args.canonical, fetch_cfg)

    def open_store(self) -> Store:
        return Store(self.store_root)

    def trust(self) -> list:
        path = self.trust_file or self.store_root / TRUST_FILE
        if self.trust_file is None and not path.exists():
            return []
        try:
            return load_trust(path)
        except OSError as exc:
            raise CliFailure(f"trust file: {exc}") from None


def _source_id(args, cfg: CliConfig) -> Digest:
    """Fingerprint used for new records: --source, else a per-store identity."""
    if args.source:
        try:
            return Digest.parse(args.source)
        except ValueError as exc:
            raise CliFailure(f"--source: {exc}") from None
    path = cfg.store_root / IDENTITY_FILE
    if path.exists():
        return Digest.parse(path.read_text(encoding="ascii"))
    ident = Digest(os.urandom(32))
    cfg.store_root.mkdir(parents=True, exist_ok=True)
    path.write_text(ident.hex() + "\n", encoding="ascii")
    return ident


def _out() -> BinaryIO:
    return sys.stdout.buffer


def _emit_value(value, cfg: CliConfig, canonical_bytes: bytes) -> None:
    if cfg.canonical:
        _out().write(canonical_bytes)
    else:
        _out().write(render_display(value).encode("utf-8") + b"\n")
    _out().flush()


def _emit_records(records, cfg: CliConfig) -> None:
    for r in records:
        _emit_value(r.to_sexpr(), cfg, r.canonical())


def _read_input(path: Optional[str]) -> bytes:
    if path is None or path == "-":
        return sys.stdin.buffer.read()
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise CliFailure(f"{path}: {exc.strerror or exc}") from None


# -- commands --------------------------------------------------------------------

def cmd_hex(args, cfg: CliConfig) -> int:
    source = _read_input(args.script)
    try:
        program = compile_hex(source)
    except HexSyntaxError as exc:
        raise CliFailure(f"{args.script}: {exc}") from None
    page = _read_input(args.page)
    outcome = execute(program, parse_html(page))
    _out().write(outcome.stdout)
    _out().flush()
    for msg in outcome.diagnostics:
        print(f"hex: {msg}", file=sys.stderr)
    if outcome.error:
        print(f"hex: {outcome.error}", file=sys.stderr)
    return outcome.exit_status


def cmd_dom(args, cfg: CliConfig) -> int:
    sys.stdout.write(parse_html(_read_input(args.page)).dump())
    return 0


def cmd_rule_add(args, cfg: CliConfig) -> int:
    records = parse_records_display(_read_input(args.file))
    if not records:
        raise CliFailure("no records in input")
    store = cfg.open_store()
    added = []
    for r in records:
        if not isinstance(r, RuleRecord):
            raise CliFailure(f"expected a rule record, got {r.kind}")
        if r.script is not None:
            store.put_script(r.script)
        elif not store.has_blob(r.script_hash):
            print(f"pcsi: warning: script {r.script_hash.display()} is not in the store", file=sys.stderr)
        added.append(store.append_record(r))
    _emit_records(added, cfg)
    return 0


def cmd_script_add(args, cfg: CliConfig) -> int:
    digest = cfg.open_store().put_script(_read_input(args.file))
    sys.stdout.write(digest.display() + "\n")
    return 0


def cmd_rules_list(args, cfg: CliConfig) -> int:
    store = cfg.open_store()
    rules = store.list_records(type="rule")
    if args.url is not None:
        rules = select_rules(rules, args.url, cfg.trust())
    _emit_records(rules, cfg)
    return 0


def cmd_infer(args, cfg: CliConfig) -> int:
    store = cfg.open_store()
    outcome = infer(args.url, store, cfg.trust(), cfg.fetch, _source_id(args, cfg),
                    try_all=args.try_all, keep_page=args.keep_page)
    _emit_records(outcome.attempts, cfg)
    if outcome.ok:
        return 0
    print(f"pcsi: {outcome.error}", file=sys.stderr)
    return 1


def cmd_object_get(args, cfg: CliConfig) -> int:
    try:
        digest = Digest.parse(args.digest)
    except ValueError as exc:
        raise CliFailure(f"not found: {exc}") from None
    data = cfg.open_store().get_blob(digest)
    if cfg.canonical:
        _out().write(data)
        return 0
    try:
        value = parse_canonical(data)
    except SExprError:
        _out().write(data)
        return 0
    _emit_value(value, cfg, data)
    return 0


def cmd_perceive(args, cfg: CliConfig) -> int:
    store = cfg.open_store()
    try:
        record = perceive(args.url, args.object_hash, args.valid, _source_id(args, cfg), store,
                          object_type=args.object_type)
    except (PerceptionError, ValueError) as exc:
        raise CliFailure(str(exc)) from None
    _emit_records([record], cfg)
    return 0


def cmd_records_list(args, cfg: CliConfig) -> int:
    store = cfg.open_store()
    recs = store.list_records(type=args.type, url=args.url, source=args.source, object_type=args.object_type)
    _emit_records(recs, cfg)
    return 0


def cmd_records_export(args, cfg: CliConfig) -> int:
    data = cfg.open_store().export_records(include_objects=args.include_objects)
    if args.output and args.output != "-":
        Path(args.output).write_bytes(data)
    else:
        _out().write(data)
        _out().flush()
    return 0


def cmd_records_import(args, cfg: CliConfig) -> int:
    count = cfg.open_store().import_records(_read_input(args.file))
    print(f"imported {count} records", file=sys.stderr)
    return 0


# -- parser --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pcsi", description="Run Hex scripts over HTML and manage PCSI records.")
    p.add_argument("--store", help=f"store root (default ${STORE_ENV} or ~/.pcsi)")
    p.add_argument("--trust", help="trust file: one source fingerprint per line, most trusted first")
    p.add_argument("--canonical", action="store_true", help="write canonical bytes instead of display text")
    p.add_argument("--source", help="fingerprint for new records (hex or |base64|)")
    p.add_argument("--timeout", type=float, default=30.0, help="fetch timeout in seconds")
    p.add_argument("--max-bytes", type=int, default=16 * 1024 * 1024, help="largest page body accepted")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    s = sub.add_parser("hex", help="run a script over a page and print its output")
    s.add_argument("script")
    s.add_argument("page", nargs="?", help="HTML file (default: standard input)")
    s.set_defaults(func=cmd_hex)

    s = sub.add_parser("dom", help="print the node tree of a page with node IDs")
    s.add_argument("page", nargs="?")
    s.set_defaults(func=cmd_dom)

    rule = sub.add_parser("rule", help="rule records").add_subparsers(dest="rule_cmd", required=True, metavar="action")
    s = rule.add_parser("add", help="add rules from a display-form file")
    s.add_argument("file", nargs="?")
    s.set_defaults(func=cmd_rule_add)

    script = sub.add_parser("script", help="script blobs").add_subparsers(dest="script_cmd", required=True, metavar="action")
    s = script.add_parser("add", help="store a script and print its hash")
    s.add_argument("file", nargs="?")
    s.set_defaults(func=cmd_script_add)

    rules = sub.add_parser("rules", help="list rules").add_subparsers(dest="rules_cmd", required=True, metavar="action")
    s = rules.add_parser("list")
    s.add_argument("--url", help="only rules matching URL, best first")
    s.set_defaults(func=cmd_rules_list)

    s = sub.add_parser("infer", help="run the best rule for a URL and record the result")
    s.add_argument("url")
    s.add_argument("--offline", metavar="FILE", help="read the page from FILE instead of the network")
    s.add_argument("--try-all", action="store_true", help="try further rules until one succeeds")
    s.add_argument("--keep-page", action="store_true", help="store the fetched page as a blob")
    s.set_defaults(func=cmd_infer)

    obj = sub.add_parser("object", help="stored objects").add_subparsers(dest="object_cmd", required=True, metavar="action")
    s = obj.add_parser("get")
    s.add_argument("digest", help="hex or |base64| digest")
    s.set_defaults(func=cmd_object_get)

    s = sub.add_parser("perceive", help="record whether an object fits a URL")
    s.add_argument("url")
    s.add_argument("--object-hash", required=True)
    s.add_argument("--valid", required=True, choices=["0", "1"])
    s.add_argument("--object-type", help="needed when the object is not in the store")
    s.set_defaults(func=cmd_perceive)

    recs = sub.add_parser("records", help="the record log").add_subparsers(dest="records_cmd", required=True, metavar="action")
    s = recs.add_parser("list")
    s.add_argument("--type", choices=["rule", "inference", "perception"])
    s.add_argument("--url")
    s.add_argument("--source")
    s.add_argument("--object-type")
    s.set_defaults(func=cmd_records_list)
    s = recs.add_parser("export", help="write the log as a canonical stream")
    s.add_argument("output", nargs="?")
    s.add_argument("--include-objects", action="store_true", help="keep object fields")
    s.set_defaults(func=cmd_records_export)
    s = recs.add_parser("import", help="append records from a canonical stream")
    s.add_argument("file", nargs="?")
    s.set_defaults(func=cmd_records_import)
    return p


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        cfg = CliConfig.from_args(args)
        return args.func(args, cfg)
    except (CliFailure, RecordError, BlobCorrupt, BlobNotFound, SExprError) as exc:
        print(f"pcsi: {exc}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        return 1


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
