"""Rule, inference and perception records.

Every record is a list headed by its type atom followed by ``(name value)``
fields.  Known fields are emitted in a fixed order (source, timestamp, then
the type-specific ones); fields this module does not know about are kept
verbatim and emitted after the known ones.

URL patterns are Awk EREs matched against the *whole* URL.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .ere import RegexError, compile_regex
from .sexpr import (
    DIGEST_SIZE,
    Digest,
    SExpr,
    SExprError,
    atom,
    encode_canonical,
    hash_canonical,
    is_atom,
    parse_display_many,
    render_display,
)

Bytesish = Union[str, bytes]

_DECIMAL = re.compile(rb"0|[1-9][0-9]*")
_TOKEN = re.compile(rb"[A-Za-z\-./_:*+=][A-Za-z0-9\-./_:*+=]*")


class RecordError(ValueError):
    """A record violates one of its field rules.  ``field`` names the culprit."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


# -- field checks ------------------------------------------------------------

def _fingerprint(value, name: str = "source") -> Digest:
    if isinstance(value, str):
        try:
            return Digest.parse(value)
        except ValueError as exc:
            raise RecordError(f"{name}: {exc}", name) from None
    raw = bytes(value)
    if len(raw) != DIGEST_SIZE:
        raise RecordError(f"{name}: must be {DIGEST_SIZE} bytes, got {len(raw)}", name)
    return Digest(raw)


def _timestamp(value) -> str:
    if isinstance(value, int) and not isinstance(value, bool):
        value = str(value)
    raw = atom(value)
    if not _DECIMAL.fullmatch(raw):
        raise RecordError(f"timestamp: not a non-negative decimal integer: {raw!r}", "timestamp")
    return raw.decode("ascii")


def _token(value, name: str) -> str:
    raw = atom(value)
    if not _TOKEN.fullmatch(raw):
        raise RecordError(f"{name}: not a token: {raw!r}", name)
    return raw.decode("ascii")


def _pattern(value) -> bytes:
    raw = atom(value)
    try:
        compile_regex(raw)
    except RegexError as exc:
        raise RecordError(f"pattern: {exc}", "pattern") from None
    return raw


def _valid_flag(value) -> str:
    if isinstance(value, bool):
        value = "1" if value else "0"
    raw = atom(str(value) if isinstance(value, int) else value)
    if raw not in (b"0", b"1"):
        raise RecordError('valid must be "0" or "1"', "valid")
    return raw.decode("ascii")


def _script_pair(script: Optional[bytes], script_hash) -> tuple[Optional[bytes], Optional[Digest]]:
    if script is None and script_hash is None:
        raise RecordError("one of script or script-hash is required", "script-hash")
    if script is not None:
        script = atom(script)
    if script_hash is not None:
        script_hash = _fingerprint(script_hash, "script-hash")
        if script is not None and hash_canonical(script) != script_hash:
            raise RecordError("script-hash does not match script", "script-hash")
    return script, script_hash


def _field(name: str, value) -> list:
    return [name.encode("ascii"), value]


class Record:
    """Shared behaviour of the three record dataclasses."""

    kind: str = ""

    def _fields(self) -> list:
        raise NotImplementedError

    def to_sexpr(self) -> list:
        return [self.kind.encode("ascii")] + self._fields() + [list(x) for x in self.extra]

    def canonical(self) -> bytes:
        return encode_canonical(self.to_sexpr())

    def display(self) -> str:
        return render_display(self.to_sexpr())

    @property
    def digest(self) -> Digest:
        return hash_canonical(self.to_sexpr())


@dataclass(frozen=True)
class RuleRecord(Record):
    source: Digest
    timestamp: str
    pattern: bytes
    object_type: str
    script_hash: Optional[Digest] = None
    script: Optional[bytes] = None
    extra: tuple = field(default=(), compare=True, repr=False)

    kind = "rule"

    def __post_init__(self):
        script, script_hash = _script_pair(self.script, self.script_hash)
        object.__setattr__(self, "source", _fingerprint(self.source))
        object.__setattr__(self, "timestamp", _timestamp(self.timestamp))
        object.__setattr__(self, "pattern", _pattern(self.pattern))
        object.__setattr__(self, "object_type", _token(self.object_type, "object-type"))
        object.__setattr__(self, "script", script)
        object.__setattr__(self, "script_hash", script_hash)

    @property
    def resolved_script_hash(self) -> Digest:
        return self.script_hash if self.script_hash is not None else hash_canonical(self.script)

    def matches(self, url: Bytesish) -> bool:
        return pattern_matches(self.pattern, url)

    def _fields(self) -> list:
        out = [
            _field("source", self.source),
            _field("timestamp", self.timestamp.encode("ascii")),
            _field("pattern", self.pattern),
        ]
        if self.script_hash is not None:
            out.append(_field("script-hash", self.script_hash))
        if self.script is not None:
            out.append(_field("script", self.script))
        out.append(_field("object-type", self.object_type.encode("ascii")))
        return out


@dataclass(frozen=True)
class InferenceRecord(Record):
    source: Digest
    timestamp: str
    url: bytes
    script_hash: Optional[Digest] = None
    script: Optional[bytes] = None
    object_type: Optional[str] = None
    object_hash: Optional[Digest] = None
    object: Optional[SExpr] = None
    error: Optional[str] = None
    extra: tuple = field(default=(), compare=True, repr=False)

    kind = "inference"

    def __post_init__(self):
        script, script_hash = _script_pair(self.script, self.script_hash)
        object.__setattr__(self, "source", _fingerprint(self.source))
        object.__setattr__(self, "timestamp", _timestamp(self.timestamp))
        object.__setattr__(self, "url", atom(self.url))
        object.__setattr__(self, "script", script)
        object.__setattr__(self, "script_hash", script_hash)
        has_result = any(x is not None for x in (self.object_type, self.object_hash, self.object))
        if self.error is not None:
            if has_result:
                raise RecordError("error records carry no object-type, object-hash or object", "error")
            err = self.error.decode("utf-8", "replace") if isinstance(self.error, bytes) else str(self.error)
            object.__setattr__(self, "error", err)
            return
        if self.object_type is None:
            raise RecordError("object-type is required unless error is present", "object-type")
        if self.object_hash is None and self.object is None:
            raise RecordError("one of object-hash or object is required unless error is present", "object-hash")
        object.__setattr__(self, "object_type", _token(self.object_type, "object-type"))
        if self.object_hash is not None:
            object.__setattr__(self, "object_hash", _fingerprint(self.object_hash, "object-hash"))
            if self.object is not None and hash_canonical(self.object) != self.object_hash:
                raise RecordError("object-hash does not match object", "object-hash")

    @property
    def succeeded(self) -> bool:
        return self.error is None

    @property
    def resolved_object_hash(self) -> Optional[Digest]:
        if self.object_hash is not None:
            return self.object_hash
        if self.object is not None:
            return hash_canonical(self.object)
        return None

    def _fields(self) -> list:
        out = [
            _field("source", self.source),
            _field("timestamp", self.timestamp.encode("ascii")),
            _field("url", self.url),
        ]
        if self.script_hash is not None:
            out.append(_field("script-hash", self.script_hash))
        if self.script is not None:
            out.append(_field("script", self.script))
        if self.error is not None:
            out.append(_field("error", self.error.encode("utf-8")))
            return out
        out.append(_field("object-type", self.object_type.encode("ascii")))
        if self.object_hash is not None:
            out.append(_field("object-hash", self.object_hash))
        if self.object is not None:
            out.append(_field("object", self.object))
        return out


@dataclass(frozen=True)
class PerceptionRecord(Record):
    source: Digest
    timestamp: str
    url: bytes
    object_type: str
    object_hash: Digest
    valid: str
    extra: tuple = field(default=(), compare=True, repr=False)

    kind = "perception"

    def __post_init__(self):
        object.__setattr__(self, "source", _fingerprint(self.source))
        object.__setattr__(self, "timestamp", _timestamp(self.timestamp))
        object.__setattr__(self, "url", atom(self.url))
        object.__setattr__(self, "object_type", _token(self.object_type, "object-type"))
        object.__setattr__(self, "object_hash", _fingerprint(self.object_hash, "object-hash"))
        object.__setattr__(self, "valid", _valid_flag(self.valid))

    def _fields(self) -> list:
        return [
            _field("source", self.source),
            _field("timestamp", self.timestamp.encode("ascii")),
            _field("url", self.url),
            _field("object-type", self.object_type.encode("ascii")),
            _field("object-hash", self.object_hash),
            _field("valid", self.valid.encode("ascii")),
        ]


AnyRecord = Union[RuleRecord, InferenceRecord, PerceptionRecord]


# -- constructors ------------------------------------------------------------

def make_rule(source, timestamp, pattern: Bytesish, script: Optional[Bytesish] = None,
              object_type: Bytesish = "", *, script_hash=None) -> RuleRecord:
    """Build a rule.  Pass the script text, its hash, or both."""
    return RuleRecord(source, timestamp, pattern, object_type, script_hash,
                      atom(script) if script is not None else None)


def make_inference(source, timestamp, url: Bytesish, *, script_hash=None, script=None,
                   object_type=None, object_hash=None, obj: Optional[SExpr] = None,
                   error: Optional[str] = None) -> InferenceRecord:
    return InferenceRecord(source, timestamp, url, script_hash,
                           atom(script) if script is not None else None,
                           object_type, object_hash, obj, error)


def make_perception(source, timestamp, url: Bytesish, object_type, object_hash, valid) -> PerceptionRecord:
    return PerceptionRecord(source, timestamp, url, object_type, object_hash, valid)


# -- parsing -------------------------------------------------------------------

_KNOWN = {
    "rule": ("source", "timestamp", "pattern", "script-hash", "script", "object-type"),
    "inference": ("source", "timestamp", "url", "script-hash", "script",
                  "object-type", "object-hash", "object", "error"),
    "perception": ("source", "timestamp", "url", "object-type", "object-hash", "valid"),
}
_REQUIRED = {
    "rule": ("source", "timestamp", "pattern", "object-type"),
    "inference": ("source", "timestamp", "url"),
    "perception": ("source", "timestamp", "url", "object-type", "object-hash", "valid"),
}


def _digest_field(fields: dict, name: str) -> Optional[Digest]:
    raw = fields.get(name)
    if raw is None:
        return None
    if len(raw) != DIGEST_SIZE:
        raise RecordError(f"{name}: malformed digest width {len(raw)} (want {DIGEST_SIZE})", name)
    return Digest(raw)


def parse_record(v: SExpr) -> AnyRecord:
    """Validate an S-expression and return the matching record dataclass."""
    if is_atom(v) or not v or not is_atom(v[0]):
        raise RecordError("record must be a list headed by its type")
    kind = bytes(v[0]).decode("utf-8", "replace")
    if kind not in _KNOWN:
        raise RecordError(f"unknown record type: {kind!r}")
    known = _KNOWN[kind]
    fields: dict = {}
    extra = []
    for item in v[1:]:
        if is_atom(item) or len(item) != 2 or not is_atom(item[0]):
            raise RecordError(f"malformed field in {kind} record: {render_display(item)}")
        name = bytes(item[0]).decode("utf-8", "replace")
        if name not in known:
            extra.append(tuple(item))
            continue
        if name in fields:
            raise RecordError(f"duplicate field: {name}", name)
        value = item[1]
        if name != "object" and not is_atom(value):
            raise RecordError(f"{name}: must be an atom", name)
        fields[name] = value
    for name in _REQUIRED[kind]:
        if name not in fields:
            raise RecordError(f"missing required field: {name}", name)
    source = _digest_field(fields, "source")
    extra = tuple(extra)
    if kind == "rule":
        return RuleRecord(source, fields["timestamp"], fields["pattern"], fields["object-type"],
                          _digest_field(fields, "script-hash"), fields.get("script"), extra)
    if kind == "inference":
        return InferenceRecord(source, fields["timestamp"], fields["url"],
                               _digest_field(fields, "script-hash"), fields.get("script"),
                               fields.get("object-type"), _digest_field(fields, "object-hash"),
                               fields.get("object"), fields.get("error"), extra)
    return PerceptionRecord(source, fields["timestamp"], fields["url"], fields["object-type"],
                            _digest_field(fields, "object-hash"), fields["valid"], extra)


def parse_records_display(text: Bytesish) -> list:
    """Parse display text holding zero or more records."""
    try:
        values = parse_display_many(text)
    except SExprError as exc:
        raise RecordError(f"bad display syntax: {exc}") from None
    return [parse_record(v) for v in values]


def shareable(record: AnyRecord) -> AnyRecord:
    """The form of ``record`` that may be shared automatically: no ``object`` field."""
    if isinstance(record, InferenceRecord) and record.object is not None:
        return replace(record, object_hash=record.resolved_object_hash, object=None)
    return record


# -- selection -------------------------------------------------------------------

def pattern_matches(pattern: Bytesish, url: Bytesish) -> bool:
    """True iff ``pattern`` matches all of ``url`` (implicitly anchored at both ends)."""
    return compile_regex(atom(pattern)).fullmatch(atom(url))


def select_rules(rules: Iterable[RuleRecord], url: Bytesish,
                 trust: Sequence[bytes] = ()) -> list:
    """Rules whose pattern matches ``url``, best first.

    Order: trust rank of the source (unlisted sources after all listed ones),
    then newest timestamp, then canonical bytes.
    """
    rank = {}
    for i, src in enumerate(trust):
        rank.setdefault(bytes(src), i)
    matching = [r for r in rules if r.matches(url)]
    return sorted(
        matching,
        key=lambda r: (rank.get(bytes(r.source), len(rank)), -int(r.timestamp), r.canonical()),
    )


def load_trust(path: Union[str, Path]) -> list:
    """Read a trust file: one fingerprint per line (hex or ``|base64|``), ``#`` comments."""
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            out.append(Digest.parse(line))
        except ValueError as exc:
            raise RecordError(f"{path}:{lineno}: {exc}") from None
    return out
