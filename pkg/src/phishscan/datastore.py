"""Dataset manifest loading and file-backed persistence.

Storage is deliberately plain: a CSV manifest for labeled datasets, and
append-only JSON-lines files for the scan history and the response cache.
A torn trailing line (interrupted append) is recovered by quarantining it
to a sidecar file; corruption anywhere else is an error, never silently
skipped.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import threading
from dataclasses import dataclass
from pathlib import Path

from ulid import ULID

from .core import GroundTruthRecord, Label, ScanOutcome, outcome_from_dict, outcome_to_dict
from .errors import (
    CorruptStore,
    DuplicateUrl,
    MalformedRow,
    MissingArtifact,
    NotFound,
    PhishscanError,
)

logger = logging.getLogger(__name__)

MANIFEST_HEADER = ["url", "label", "screenshot_path", "html_path"]

HISTORY_ORIGINS = ("api", "cli", "eval")


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Append-only JSON-lines files


def load_jsonl(path: str | Path, *, repair: bool = False) -> list[dict]:
    """Read every record from an append-only JSON-lines file.

    A torn final line is copied to ``<path>.quarantine`` and, when
    ``repair`` is true (writers), truncated away so the file is clean for
    the next append. Readers leave the file untouched. A bad line that is
    NOT the last one means real corruption and raises CorruptStore.
    """
    path = Path(path)
    raw = path.read_bytes()
    records: list[dict] = []
    offset = 0
    lines = raw.split(b"\n")
    # A trailing newline yields one empty final chunk; drop it.
    if lines and lines[-1] == b"":
        lines.pop()
    for i, line in enumerate(lines):
        if not line.strip():
            offset += len(line) + 1
            continue
        try:
            records.append(json.loads(line))
        except ValueError:
            if i != len(lines) - 1:
                raise CorruptStore(str(path), i + 1)
            quarantine = path.with_name(path.name + ".quarantine")
            with open(quarantine, "ab") as q:
                q.write(line + b"\n")
            logger.warning(
                "quarantined torn trailing record from %s to %s", path, quarantine
            )
            if repair:
                with open(path, "r+b") as f:
                    f.truncate(offset)
            return records
        offset += len(line) + 1
    return records


class JsonlWriter:
    """Serialized appender for a JSON-lines file."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, record: dict) -> None:
        line = json.dumps(record, ensure_ascii=False, sort_keys=True)
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(line + "\n")
                f.flush()
                os.fsync(f.fileno())


# ---------------------------------------------------------------------------
# Dataset manifest


@dataclass(frozen=True)
class DatasetManifest:
    """Validated, immutable view of a labeled dataset."""

    records: tuple[GroundTruthRecord, ...]
    root: Path
    checksum: str

    @property
    def counts(self) -> tuple[int, int]:
        """(legitimate, phishing) record counts."""
        phishing = sum(1 for r in self.records if r.true_label is Label.PHISHING)
        return (len(self.records) - phishing, phishing)

    def by_url(self) -> dict[str, GroundTruthRecord]:
        return {r.url: r for r in self.records}


def load_manifest(path: str | Path) -> DatasetManifest:
    """Load and validate a CSV manifest (header: url,label,screenshot_path,html_path).

    Relative artifact paths resolve against the manifest's directory. Every
    referenced file must exist and be non-empty; URLs must be unique.
    """
    path = Path(path)
    root = path.parent
    records: list[GroundTruthRecord] = []
    seen: set[str] = set()

    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow(1, "empty manifest") from None
        if header != MANIFEST_HEADER:
            raise MalformedRow(1, f"header must be {','.join(MANIFEST_HEADER)}")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise MalformedRow(line_no, f"expected 4 columns, got {len(row)}")
            url, label_text, shot_rel, html_rel = row
            if label_text not in ("phishing", "legitimate"):
                raise MalformedRow(line_no, f"label must be phishing|legitimate, got {label_text!r}")
            if url in seen:
                raise DuplicateUrl(url, line_no)
            seen.add(url)
            record = GroundTruthRecord(
                url=url,
                true_label=Label.PHISHING if label_text == "phishing" else Label.LEGITIMATE,
                screenshot_path=(root / shot_rel).resolve(),
                html_path=(root / html_rel).resolve(),
            )
            for field_name, p in (
                ("screenshot_path", record.screenshot_path),
                ("html_path", record.html_path),
            ):
                if not p.is_file() or p.stat().st_size == 0:
                    raise MissingArtifact(url, field_name, str(p))
            records.append(record)

    return DatasetManifest(records=tuple(records), root=root, checksum=sha256_file(path))


# ---------------------------------------------------------------------------
# Scan history


@dataclass(frozen=True)
class ScanHistoryEntry:
    scan_id: str
    outcome: ScanOutcome
    origin: str

    def __post_init__(self):
        if self.origin not in HISTORY_ORIGINS:
            raise ValueError(f"origin must be one of {HISTORY_ORIGINS}")


def _entry_to_dict(entry: ScanHistoryEntry) -> dict:
    return {
        "scan_id": entry.scan_id,
        "origin": entry.origin,
        "outcome": outcome_to_dict(entry.outcome),
    }


def _entry_from_dict(data: dict) -> ScanHistoryEntry:
    return ScanHistoryEntry(
        scan_id=data["scan_id"],
        origin=data["origin"],
        outcome=outcome_from_dict(data["outcome"]),
    )


class ScanHistory:
    """Append-only scan log with an in-memory index.

    Single-writer: all mutation goes through store(), serialized by a lock.
    Ids are ULIDs, unique and sortable by creation time; a monotonic bump
    keeps ordering even for stores landing in the same millisecond.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: list[ScanHistoryEntry] = []
        self._index: dict[str, ScanHistoryEntry] = {}
        self._last_id: str | None = None
        if self.path.exists():
            for raw in load_jsonl(self.path, repair=True):
                entry = _entry_from_dict(raw)
                self._entries.append(entry)
                self._index[entry.scan_id] = entry
            if self._entries:
                self._last_id = max(e.scan_id for e in self._entries)
        self._writer = JsonlWriter(self.path)

    def _next_id(self) -> str:
        candidate = str(ULID())
        if self._last_id is not None and candidate <= self._last_id:
            bumped = int.from_bytes(ULID.from_str(self._last_id).bytes, "big") + 1
            candidate = str(ULID(bumped.to_bytes(16, "big")))
        self._last_id = candidate
        return candidate

    def store(self, outcome: ScanOutcome, origin: str) -> ScanHistoryEntry:
        with self._lock:
            entry = ScanHistoryEntry(scan_id=self._next_id(), outcome=outcome, origin=origin)
            self._writer.append(_entry_to_dict(entry))
            self._entries.append(entry)
            self._index[entry.scan_id] = entry
            return entry

    def fetch(self, scan_id: str) -> ScanHistoryEntry:
        try:
            return self._index[scan_id]
        except KeyError:
            raise NotFound(scan_id) from None

    def recent(self, limit: int = 20) -> list[ScanHistoryEntry]:
        if limit < 0:
            raise PhishscanError("limit must be >= 0")
        return list(reversed(self._entries[-limit:] if limit else []))

    def __len__(self) -> int:
        return len(self._entries)
