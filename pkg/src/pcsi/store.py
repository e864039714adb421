"""On-disk store: content-addressed blobs plus an append-only record log.

Layout under the root directory::

    blobs/<64 lowercase hex digits>   raw bytes whose SHA-256 is the name
    records.log                       concatenated canonical records
    records.lock                      writer lock for records.log

Scripts are stored as the canonical encoding of a single atom, so the blob
name equals the script hash.  Objects are stored as their canonical bytes,
so the blob name equals the object hash.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Union

from filelock import FileLock

from .records import AnyRecord, RecordError, parse_record, shareable
from .sexpr import Digest, SExprError, atom, encode_canonical, hash_bytes, iter_canonical, parse_canonical

LOG_NAME = "records.log"
LOCK_NAME = "records.lock"
BLOB_DIR = "blobs"


class StoreError(Exception):
    pass


class BlobNotFound(StoreError, KeyError):
    def __str__(self) -> str:
        return f"not found: {self.args[0]}"


class BlobCorrupt(StoreError):
    pass


@dataclass
class AuditReport:
    blobs_checked: int = 0
    mismatches: list = field(default_factory=list)
    stray_files: list = field(default_factory=list)
    records: int = 0
    log_error: Optional[str] = None

    @property
    def clean(self) -> bool:
        return not self.mismatches and self.log_error is None


def _as_digest(d) -> Digest:
    if isinstance(d, Digest):
        return d
    if isinstance(d, str):
        return Digest.parse(d)
    return Digest(d)


class Store:
    """A store rooted at ``root``; the directory is created on demand."""

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)
        self.blob_dir = self.root / BLOB_DIR
        self.log_path = self.root / LOG_NAME
        self.blob_dir.mkdir(parents=True, exist_ok=True)
        self._lock = FileLock(str(self.root / LOCK_NAME))
        with self._lock:
            self._recover_log()

    # -- blobs ---------------------------------------------------------------

    def blob_path(self, d) -> Path:
        return self.blob_dir / _as_digest(d).hex()

    def put_blob(self, b: bytes) -> Digest:
        b = bytes(b)
        d = hash_bytes(b)
        path = self.blob_path(d)
        if path.exists():
            return d
        fd, tmp = tempfile.mkstemp(dir=self.blob_dir, prefix=".tmp-")
        try:
            with os.fdopen(fd, "wb") as f:
                f.write(b)
                f.flush()
                os.fsync(f.fileno())
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return d

    def get_blob(self, d) -> bytes:
        d = _as_digest(d)
        try:
            data = self.blob_path(d).read_bytes()
        except FileNotFoundError:
            raise BlobNotFound(d.hex()) from None
        if hash_bytes(data) != d:
            raise BlobCorrupt(f"blob {d.hex()} does not match its digest")
        return data

    def has_blob(self, d) -> bool:
        return self.blob_path(d).exists()

    def put_script(self, source: bytes) -> Digest:
        """Store script text so that its blob name is its script hash."""
        return self.put_blob(encode_canonical(atom(source)))

    def get_script(self, d) -> bytes:
        data = self.get_blob(d)
        try:
            value = parse_canonical(data)
        except SExprError as exc:
            raise BlobCorrupt(f"blob {_as_digest(d).hex()} is not a script: {exc}") from None
        if not isinstance(value, bytes):
            raise BlobCorrupt(f"blob {_as_digest(d).hex()} is not a script")
        return value

    def iter_blobs(self) -> Iterator[Path]:
        for p in sorted(self.blob_dir.iterdir()):
            if not p.name.startswith(".tmp-"):
                yield p

    # -- record log ------------------------------------------------------------

    def _recover_log(self) -> int:
        """Drop a torn tail left by an interrupted append; returns bytes removed."""
        try:
            data = self.log_path.read_bytes()
        except FileNotFoundError:
            return 0
        good = 0
        try:
            for _value, _start, end in iter_canonical(data):
                good = end
        except SExprError:
            pass
        if good == len(data):
            return 0
        with open(self.log_path, "r+b") as f:
            f.truncate(good)
            f.flush()
            os.fsync(f.fileno())
        return len(data) - good

    def append_record(self, record) -> AnyRecord:
        """Validate and append one record; accepts a record or its S-expression."""
        if not hasattr(record, "canonical"):
            record = parse_record(record)
        payload = record.canonical()
        with self._lock:
            self._recover_log()
            fd = os.open(self.log_path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
            try:
                written = os.write(fd, payload)
                if written != len(payload):
                    # a short write leaves a torn tail; the next open truncates it
                    raise StoreError("short write to record log")
                os.fsync(fd)
            finally:
                os.close(fd)
        return record

    def raw_records(self) -> list:
        """Every S-expression in the log, in append order.  A torn tail is ignored."""
        try:
            data = self.log_path.read_bytes()
        except FileNotFoundError:
            return []
        out = []
        try:
            for value, _start, _end in iter_canonical(data):
                out.append(value)
        except SExprError:
            pass
        return out

    def records(self) -> list:
        return [parse_record(v) for v in self.raw_records()]

    def list_records(self, type: Optional[str] = None, url=None, source=None,
                     object_type: Optional[str] = None) -> list:
        """Records matching every given filter, in append order."""
        url = atom(url) if url is not None else None
        if source is not None and not isinstance(source, bytes):
            try:
                source = _as_digest(source)
            except ValueError:
                return []
        out = []
        for r in self.records():
            if type is not None and r.kind != type:
                continue
            if url is not None and getattr(r, "url", None) != url:
                continue
            if source is not None and bytes(r.source) != bytes(source):
                continue
            if object_type is not None and getattr(r, "object_type", None) != object_type:
                continue
            out.append(r)
        return out

    def export_records(self, include_objects: bool = False) -> bytes:
        """The log as a canonical stream, with ``object`` fields dropped unless asked."""
        recs = self.records()
        if not include_objects:
            recs = [shareable(r) for r in recs]
        return b"".join(r.canonical() for r in recs)

    def import_records(self, data: bytes) -> int:
        """Append every record in a canonical stream; all are validated first."""
        try:
            recs = [parse_record(v) for v, _s, _e in iter_canonical(bytes(data))]
        except SExprError as exc:
            raise RecordError(f"import stream: {exc}") from None
        for r in recs:
            self.append_record(r)
        return len(recs)

    # -- audit -------------------------------------------------------------------

    def audit(self) -> AuditReport:
        """Re-hash every blob and re-parse the whole log."""
        report = AuditReport()
        for p in self.iter_blobs():
            try:
                expected = Digest.from_hex(p.name)
            except ValueError:
                report.stray_files.append(p.name)
                continue
            report.blobs_checked += 1
            if hash_bytes(p.read_bytes()) != expected or p.name != expected.hex():
                report.mismatches.append(p.name)
        try:
            data = self.log_path.read_bytes()
        except FileNotFoundError:
            data = b""
        try:
            for value, start, _end in iter_canonical(data):
                try:
                    parse_record(value)
                except RecordError as exc:
                    report.log_error = f"record at offset {start}: {exc}"
                    break
                report.records += 1
        except SExprError as exc:
            report.log_error = str(exc)
        return report
