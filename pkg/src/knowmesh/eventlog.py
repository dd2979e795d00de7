"""Append-only event log backing every node store.

Each record is one canonical-JSON line carrying a dense sequence number and a
self-digest; load rejects gaps and digest failures. The log is the durability
on disk and the audit trail for the scoping-safety oracle in tests.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .canonical import canonical_dumps, digest_of
from .errors import CorruptEventLog


@dataclass(frozen=True)
class EventRecord:
    seq: int
    kind: str
    payload: dict
    lamport: int

    def digest(self) -> str:
        return digest_of(
            {"kind": self.kind, "lamport": self.lamport, "payload": self.payload, "seq": self.seq}
        )

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "kind": self.kind,
            "payload": self.payload,
            "lamport": self.lamport,
            "digest": self.digest(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EventRecord":
        record = cls(
            seq=data["seq"], kind=data["kind"], payload=data["payload"], lamport=data["lamport"]
        )
        if record.digest() != data.get("digest"):
            raise CorruptEventLog(f"event {data.get('seq')} fails its digest")
        return record


class EventLog:
    """In-memory record list, optionally mirrored to a JSONL file."""

    def __init__(self, path: Path | None = None):
        self._path = path
        self._records: list[EventRecord] = []
        self._fh = None
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            if path.exists():
                self._records = _load_records(path)
            self._fh = path.open("a", encoding="utf-8")

    @property
    def last_seq(self) -> int:
        return self._records[-1].seq if self._records else 0

    def append(self, kind: str, payload: dict, lamport: int) -> EventRecord:
        record = EventRecord(seq=self.last_seq + 1, kind=kind, payload=payload, lamport=lamport)
        self._records.append(record)
        if self._fh is not None:
            self._fh.write(canonical_dumps(record.to_dict()) + "\n")
            self._fh.flush()
        return record

    def records(self, after_seq: int = 0) -> tuple[EventRecord, ...]:
        return tuple(r for r in self._records if r.seq > after_seq)

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __len__(self) -> int:
        return len(self._records)


def _load_records(path: Path) -> list[EventRecord]:
    records: list[EventRecord] = []
    expected = 1
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorruptEventLog(f"unparseable event at line {line_no}: {exc}") from None
            record = EventRecord.from_dict(data)
            if record.seq != expected:
                raise CorruptEventLog(
                    f"sequence gap at line {line_no}: expected {expected}, found {record.seq}"
                )
            records.append(record)
            expected += 1
    return records
