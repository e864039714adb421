"""Fetch a page, pick a rule, run its script, record what happened."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import httpx

from .hexlang import HexSyntaxError, Limits, compile_hex, execute
from .htmldom import parse_html
from .records import (
    InferenceRecord,
    PerceptionRecord,
    RuleRecord,
    make_inference,
    make_perception,
    select_rules,
)
from .sexpr import Digest, SExprError, encode_canonical, is_atom, parse_canonical
from .store import BlobCorrupt, BlobNotFound, Store

# error messages from scripts can be long; keep the tail, which names the failure
_MAX_ERROR_TEXT = 1000


@dataclass(frozen=True)
class FetchConfig:
    timeout: float = 30.0
    max_redirects: int = 5
    max_body_bytes: int = 16 * 1024 * 1024
    user_agent: str = "pcsi/0.1"
    offline_input: Optional[Path] = None

    def __post_init__(self):
        if not self.timeout > 0:
            raise ValueError("timeout must be positive")
        if self.max_body_bytes <= 0:
            raise ValueError("max_body_bytes must be positive")
        if self.max_redirects < 0:
            raise ValueError("max_redirects must be non-negative")


class FetchError(Exception):
    pass


class PipelineError(Exception):
    """A failure that becomes the ``error`` field of an inference record."""

    def __init__(self, stage: str, detail: str = ""):
        self.stage = stage
        self.detail = detail
        super().__init__(f"{stage}: {detail}" if detail else stage)


def fetch(url: Union[str, bytes], cfg: FetchConfig = FetchConfig()) -> bytes:
    """Body of ``url`` after following redirects.  Raises FetchError."""
    if cfg.offline_input is not None:
        try:
            data = Path(cfg.offline_input).read_bytes()
        except OSError as exc:
            raise FetchError(f"offline input: {exc.strerror or exc}") from None
        if len(data) > cfg.max_body_bytes:
            raise FetchError("body too large")
        return data
    if isinstance(url, bytes):
        url = url.decode("utf-8", "replace")
    if not url.lower().startswith(("http://", "https://")):
        raise FetchError(f"unsupported url scheme: {url}")
    try:
        with httpx.Client(
            follow_redirects=True,
            max_redirects=cfg.max_redirects,
            timeout=cfg.timeout,
            headers={"User-Agent": cfg.user_agent},
        ) as client:
            with client.stream("GET", url) as resp:
                if resp.status_code != 200:
                    raise FetchError(f"http status {resp.status_code}")
                declared = resp.headers.get("content-length")
                if declared and declared.isdigit() and int(declared) > cfg.max_body_bytes:
                    raise FetchError("body too large")
                body = bytearray()
                for chunk in resp.iter_bytes():
                    body += chunk
                    if len(body) > cfg.max_body_bytes:
                        raise FetchError("body too large")
                return bytes(body)
    except httpx.TooManyRedirects:
        raise FetchError("too many redirects") from None
    except httpx.TimeoutException:
        raise FetchError("timeout") from None
    except httpx.ConnectError as exc:
        raise FetchError(f"connect failed: {exc}") from None
    except httpx.HTTPError as exc:
        raise FetchError(f"transport error: {exc}") from None


@dataclass
class InferOutcome:
    record: Optional[InferenceRecord]
    object: Optional[object] = None
    stored: list = field(default_factory=list)
    attempts: list = field(default_factory=list)
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.record is not None and self.record.succeeded


def _resolve_script(rule: RuleRecord, store: Store) -> bytes:
    if rule.script is not None:
        return rule.script
    try:
        return store.get_script(rule.script_hash)
    except BlobNotFound:
        raise PipelineError("compile", f"script {rule.script_hash.display()} not in store") from None
    except BlobCorrupt as exc:
        raise PipelineError("compile", str(exc)) from None


def _error_text(stdout: bytes, fallback: str) -> str:
    text = stdout.decode("utf-8", "replace").strip()
    if not text:
        return fallback
    return text[-_MAX_ERROR_TEXT:]


def run_rule(rule: RuleRecord, page: bytes, store: Store, limits: Limits = Limits()):
    """Run one rule's script over ``page`` and return the validated object."""
    source = _resolve_script(rule, store)
    try:
        program = compile_hex(source)
    except HexSyntaxError as exc:
        raise PipelineError("compile", str(exc)) from None
    outcome = execute(program, parse_html(page), limits)
    if outcome.error is not None:
        raise PipelineError("runtime", outcome.error)
    if outcome.exit_status != 0:
        raise PipelineError("runtime", _error_text(outcome.stdout, f"exit status {outcome.exit_status}"))
    out = outcome.stdout
    if out.endswith(b"\n"):
        out = out[:-1]
    try:
        obj = parse_canonical(out)
    except SExprError as exc:
        raise PipelineError("output-parse", str(exc)) from None
    head = obj if is_atom(obj) else (obj[0] if obj else None)
    if is_atom(obj) or head is None or not is_atom(head):
        raise PipelineError("output-parse", "output is not a typed list")
    expected = rule.object_type.encode("ascii")
    if head != expected:
        got = head.decode("utf-8", "replace")
        raise PipelineError("type-mismatch", f"expected {rule.object_type}, got {got}")
    return obj


def infer(
    url: Union[str, bytes],
    store: Store,
    trust: Sequence[bytes] = (),
    cfg: FetchConfig = FetchConfig(),
    source_id: bytes = b"",
    *,
    try_all: bool = False,
    keep_page: bool = False,
    limits: Limits = Limits(),
    clock: Callable[[], float] = time.time,
) -> InferOutcome:
    """Run the best matching rule for ``url`` and append an inference record.

    Pipeline failures become error records rather than exceptions.  With
    ``try_all`` successive rules are attempted (one record each) until one
    succeeds.  No record is written when no rule matches.
    """
    rules = [r for r in store.records() if isinstance(r, RuleRecord)]
    chosen = select_rules(rules, url, trust)
    if not chosen:
        return InferOutcome(record=None, error="no-rule: no rule matches url")
    if not try_all:
        chosen = chosen[:1]

    timestamp = str(int(clock()))
    stored = []
    page = None
    fetch_error = None
    try:
        page = fetch(url, cfg)
    except FetchError as exc:
        fetch_error = PipelineError("fetch", str(exc))
    if page is not None and keep_page:
        stored.append(store.put_blob(page))

    outcome = InferOutcome(record=None, stored=stored)
    for rule in chosen:
        script_hash = rule.resolved_script_hash
        try:
            if fetch_error is not None:
                raise fetch_error
            obj = run_rule(rule, page, store, limits)
        except PipelineError as exc:
            record = make_inference(source_id, timestamp, url, script_hash=script_hash, error=str(exc))
            store.append_record(record)
            outcome.attempts.append(record)
            outcome.record, outcome.error = record, str(exc)
            if fetch_error is not None:
                break
            continue
        object_hash = store.put_blob(encode_canonical(obj))
        stored.append(object_hash)
        record = make_inference(source_id, timestamp, url, script_hash=script_hash,
                                object_type=rule.object_type, object_hash=object_hash)
        store.append_record(record)
        outcome.attempts.append(record)
        outcome.record, outcome.object, outcome.error = record, obj, None
        break
    return outcome


class PerceptionError(ValueError):
    pass


def perceive(
    url: Union[str, bytes],
    object_hash,
    valid,
    source_id: bytes,
    store: Store,
    object_type: Optional[str] = None,
    clock: Callable[[], float] = time.time,
) -> PerceptionRecord:
    """Record a human judgement of whether an object fits the page at ``url``."""
    digest = object_hash if isinstance(object_hash, Digest) else (
        Digest.parse(object_hash) if isinstance(object_hash, str) else Digest(object_hash))
    if object_type is None:
        try:
            obj = parse_canonical(store.get_blob(digest))
        except BlobNotFound:
            raise PerceptionError(
                f"object {digest.display()} is not in the store; give its object type explicitly") from None
        except SExprError as exc:
            raise PerceptionError(f"object {digest.display()} is not an S-expression: {exc}") from None
        if is_atom(obj) or not obj or not is_atom(obj[0]):
            raise PerceptionError(f"object {digest.display()} has no type atom")
        object_type = obj[0].decode("utf-8", "replace")
    record = make_perception(source_id, str(int(clock())), url, object_type, digest, valid)
    store.append_record(record)
    return record
